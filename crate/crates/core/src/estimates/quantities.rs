//! Pointwise nonlinearity quantities and their sup/inf over `Θ`.

use serde::Serialize;

use super::cutoffs::CutoffConstants;
use super::EstimateError;
use crate::expr::{Env, Expr, Var};
use crate::geometry::{FlowBounds, GeometryState};
use crate::nonlinearity::{Bundle, NonlinearitySpec};
use crate::scalar::{lit, neg_part, pos_part, wide, Real};
use crate::solver::Cylinder;

/// `(N_q, R_Σ, P_Σ)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SoupletZhang<T> {
    pub n_q: T,
    pub r: T,
    pub p: T,
}

/// `(T_Σ, S_Σ)` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hamilton<T> {
    pub t: T,
    pub s: T,
}

/// `q₊^{1/2} + |∇q|^{1/3}`.
pub fn n_q<T: Real>(q: T, grad_q: T) -> T {
    pos_part(q).sqrt() + grad_q.abs().cbrt()
}

pub fn souplet_zhang_quantities<T: Real>(
    q: T,
    grad_q: T,
    b: &Bundle<T>,
    u: T,
    d: T,
) -> Result<SoupletZhang<T>, EstimateError> {
    if !(u > T::zero()) || u > d {
        return Err(EstimateError::OutOfRange {
            u: wide(u),
            d: wide(d),
        });
    }
    let h = (u / d).ln();
    let one_h = T::one() - h;
    let r = pos_part(b.sigma_u / one_h + h * b.sigma / (u * one_h * one_h));
    let p = b.sigma_x.abs() / (u * one_h * one_h);
    Ok(SoupletZhang {
        n_q: n_q(q, grad_q),
        r,
        p,
    })
}

pub fn hamilton_quantities<T: Real>(b: &Bundle<T>, u: T) -> Hamilton<T> {
    let two = lit::<T>(2.0);
    Hamilton {
        t: pos_part((two * u * b.sigma_u - b.sigma) / u),
        s: b.sigma_x.abs() / u,
    }
}

/// Constants entering the differential Harnack bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LiYauQuantities {
    pub a: f64,
    pub b: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma2_qu: f64,
    pub gamma3: f64,
    pub q_lower: f64,
    /// `inf_Θ [Σ − uΣ_u + λu²Σ_uu]₋ / u`, the (nonpositive) reaction part of `A`.
    pub a_reaction: f64,
    /// `sup_Θ 2|Σ_x − λuΣ_xu| / u`.
    pub b_reaction: f64,
    pub sup_grad_q: f64,
}

/// Sampling of `Θ = {(t, x, u) : (x, t) ∈ Q, u̲ <= u <= ū}`.
#[derive(Clone, Debug)]
pub struct ThetaSampler {
    pub cylinder: Cylinder,
    pub u_lo: f64,
    pub u_hi: f64,
    pub samples: usize,
    /// Upper bound on the number of time slices swept when `Σ` depends on
    /// `t` or on `x` over an evolving geometry.
    pub max_slices: usize,
}

const INFLATE: f64 = 0.01;

/// `sup` pushed up by 1%.
pub fn inflate_sup(v: f64) -> f64 {
    v + INFLATE * v.abs()
}

/// `inf` pushed down by 1%.
pub fn deflate_inf(v: f64) -> f64 {
    v - INFLATE * v.abs()
}

impl ThetaSampler {
    pub fn u_values(&self) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..n)
            .map(|j| self.u_lo + (self.u_hi - self.u_lo) * j as f64 / (n - 1) as f64)
            .collect()
    }

    /// Space-time points actually visited for a given reaction term.
    pub fn slices<T: Real>(
        &self,
        geom: &GeometryState<T>,
        sigma: &NonlinearitySpec,
    ) -> Vec<(usize, Vec<usize>)> {
        let s = &self.cylinder.slices;
        if s.is_empty() {
            return Vec::new();
        }
        let collapse = !sigma.depends_on_t() && (!sigma.depends_on_x() || geom.is_static());
        if collapse {
            let mut nodes: Vec<usize> = s.iter().flat_map(|(_, n)| n.iter().copied()).collect();
            nodes.sort_unstable();
            nodes.dedup();
            if !sigma.depends_on_x() {
                nodes.truncate(1);
            }
            return vec![(s[0].0, nodes)];
        }
        let stride = s.len().div_ceil(self.max_slices.max(1)).max(1);
        let mut out: Vec<_> = s.iter().step_by(stride).cloned().collect();
        if (s.len() - 1) % stride != 0 {
            out.push(s[s.len() - 1].clone());
        }
        out
    }
}

/// `q` with its chart derivative, evaluated on the grid.
pub struct QField {
    q: Expr,
    q_x: Expr,
    constant: bool,
}

impl QField {
    pub fn new(q: &Expr) -> Self {
        QField {
            q: q.clone(),
            q_x: q.diff(Var::X),
            constant: !q.depends_on(Var::X) && !q.depends_on(Var::T),
        }
    }

    fn value<T: Real>(&self, geom: &GeometryState<T>, i: usize, t: T) -> T {
        self.q.eval(&Env::new(t, geom.coord(i), T::zero()))
    }

    fn grad<T: Real>(&self, geom: &GeometryState<T>, i: usize, t: T) -> T {
        if self.constant {
            return T::zero();
        }
        self.q_x.eval(&Env::new(t, geom.coord(i), T::zero())) / geom.scale(t)
    }

    fn lap_f<T: Real>(&self, geom: &GeometryState<T>, i: usize, t: T) -> T {
        if self.constant {
            return T::zero();
        }
        geom.witten_laplacian_at(i, t, |j| self.value(geom, j, t))
    }
}

impl QField {
    /// `(q, |∇q|)` at node `i`, time `t`.
    pub fn point<T: Real>(&self, geom: &GeometryState<T>, i: usize, t: T) -> (T, T) {
        (self.value(geom, i, t), self.grad(geom, i, t).abs())
    }
}

/// Sweeps `Θ` (and `Q` for the `q` terms) and assembles the constants.
pub fn li_yau_quantities<T: Real>(
    geom: &GeometryState<T>,
    q: &Expr,
    sigma: &NonlinearitySpec,
    theta: &ThetaSampler,
    bounds: &FlowBounds<f64>,
    lambda: f64,
    m: f64,
) -> Result<LiYauQuantities, EstimateError> {
    if !(lambda > 1.0) {
        return Err(EstimateError::Parameter("lambda must exceed 1"));
    }
    if theta.cylinder.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let lam = lit::<T>(lambda);
    let two = lit::<T>(2.0);
    let mut a_inf = 0.0f64;
    let mut b_sup = 0.0f64;
    let mut g1 = 0.0f64;
    let mut g2_inf = 0.0f64;
    let mut g3 = f64::INFINITY;
    if sigma.is_zero() {
        g3 = 0.0;
    } else {
        let us: Vec<T> = theta.u_values().into_iter().map(lit).collect();
        for (k, nodes) in theta.slices(geom, sigma) {
            let t = geom.time(k);
            for &i in &nodes {
                for &u in &us {
                    let b = sigma.evaluate_bundle(geom, t, i, u)?;
                    let a_term = neg_part(b.sigma - u * b.sigma_u + lam * u * u * b.sigma_uu) / u;
                    let b_term = two * (b.sigma_x - lam * u * b.sigma_xu).abs() / u;
                    let g1_term = pos_part(u * b.sigma_u - b.sigma) / u;
                    let g2_term = neg_part(b.lap_f_sigma_x / u);
                    a_inf = a_inf.min(wide(a_term));
                    b_sup = b_sup.max(wide(b_term));
                    g1 = g1.max(wide(g1_term));
                    g2_inf = g2_inf.min(wide(g2_term));
                    g3 = g3.min(wide(b.sigma / u));
                }
            }
        }
    }
    let qf = QField::new(q);
    let mut grad_q = 0.0f64;
    let mut lap_q_inf = 0.0f64;
    let mut q_inf = f64::INFINITY;
    if qf.constant {
        q_inf = wide(qf.value(geom, 0, T::zero()));
    } else {
        for (k, i) in theta.cylinder.points() {
            let t = geom.time(k);
            grad_q = grad_q.max(wide(qf.grad(geom, i, t).abs()));
            lap_q_inf = lap_q_inf.min(wide(neg_part(qf.lap_f(geom, i, t))));
            q_inf = q_inf.min(wide(qf.value(geom, i, t)));
        }
    }

    let a_reaction = deflate_inf(a_inf);
    let b_reaction = inflate_sup(b_sup);
    let sup_grad_q = inflate_sup(grad_q);
    let (k1, k2l, k2u, k3) = (bounds.k1, bounds.k2_lower, bounds.k2_upper, bounds.k3);
    let (l1, l2) = (bounds.ell1, bounds.ell2);
    Ok(LiYauQuantities {
        a: 2.0 * ((m - 1.0) * k1 + (lambda - 1.0) * k2u + k3) - a_reaction,
        b: lambda * l2 + 2.0 * lambda * k2l * l1 + b_reaction + 2.0 * (lambda - 1.0) * sup_grad_q,
        gamma1: inflate_sup(g1),
        gamma2: -deflate_inf(g2_inf),
        gamma2_qu: -deflate_inf(lap_q_inf),
        gamma3: deflate_inf(g3),
        q_lower: deflate_inf(q_inf),
        a_reaction,
        b_reaction,
        sup_grad_q,
    })
}

/// Parameters shared by the differential Harnack formulas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LiYauParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub m: f64,
    pub n: usize,
}

/// `[m c₁²λ²/(2(λ−1)) + c₂ + (m−1)c₁(1 + R√k₁) + 2c₁²] / R²`.
pub fn localization_block(p: &LiYauParams, cut: &CutoffConstants, k1: f64, r: f64) -> f64 {
    let (l, m, c1) = (p.lambda, p.m, cut.c1);
    (m * c1 * c1 * l * l / (2.0 * (l - 1.0)) + cut.c2 + (m - 1.0) * c1 * (1.0 + r * k1.sqrt())
        + 2.0 * c1 * c1)
        / (r * r)
}

/// `√m {…}^{1/2}` term shared by the bound and by `S`.
pub fn root_term(q: &LiYauQuantities, b: &FlowBounds<f64>, p: &LiYauParams) -> f64 {
    let (l, m, e) = (p.lambda, p.m, p.epsilon);
    let n = p.n as f64;
    let lm1 = l - 1.0;
    let inner = m * l * l * q.a * q.a / (4.0 * (1.0 - e) * lm1 * lm1)
        + 0.75 * (m * l * l * q.b.powi(4) / (4.0 * e * lm1 * lm1)).cbrt()
        + l * l * n * (b.k2_lower + b.k2_upper).powi(2)
        + 2.0 * l * l * n * b.k3
        + l * (q.gamma2 + q.gamma2_qu);
    m.sqrt() * inner.max(0.0).sqrt()
}

/// Right-hand side of the differential Harnack bound at time `t`.
/// `radius = None` selects the global form.
pub fn li_yau_rhs(
    q: &LiYauQuantities,
    b: &FlowBounds<f64>,
    p: &LiYauParams,
    cut: &CutoffConstants,
    t: f64,
    radius: Option<f64>,
) -> f64 {
    let ml = p.m * p.lambda;
    let mut rhs = ml * (1.0 / t + cut.c1 * b.k2_lower + q.gamma1) + root_term(q, b, p);
    if let Some(r) = radius {
        rhs += ml * localization_block(p, cut, b.k1, r);
    }
    rhs
}

/// The constant `S` of the parabolic Harnack inequality.
pub fn harnack_s(
    q: &LiYauQuantities,
    b: &FlowBounds<f64>,
    p: &LiYauParams,
    cut: &CutoffConstants,
    radius: Option<f64>,
) -> f64 {
    let ml = p.m * p.lambda;
    let block = radius.map_or(0.0, |r| ml * localization_block(p, cut, b.k1, r));
    -block - root_term(q, b, p) - ml * (q.gamma1 + cut.c1 * b.k2_lower) + q.q_lower + q.gamma3
}
