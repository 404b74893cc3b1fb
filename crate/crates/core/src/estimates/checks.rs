//! Evaluation of each estimate along a discrete solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cutoffs::CutoffConstants;
use super::harnack::{elliptic_bracket, harnack_elliptic_gamma, path_energy_l, PathMesh};
use super::quantities::{
    hamilton_quantities, harnack_s, li_yau_quantities, li_yau_rhs, QField,
    souplet_zhang_quantities, LiYauParams, LiYauQuantities, ThetaSampler,
};
use super::{EstimateError, EstimateReport, ProbePoint, Scope, Status};
use crate::expr::Expr;
use crate::geometry::{BakryEmery, GeometryState, Normalization};
use crate::nonlinearity::NonlinearitySpec;
use crate::scalar::{lit, wide, Real};
use crate::solver::{Cylinder, SolutionField};

/// A solved problem: geometry, `q`, `Σ` and the discrete solution.
#[derive(Clone, Copy)]
pub struct Problem<'a, T> {
    pub geom: &'a GeometryState<T>,
    pub q: &'a Expr,
    pub sigma: &'a NonlinearitySpec,
    pub sol: &'a SolutionField<T>,
}

/// Knobs shared by all checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    /// Absolute tolerance `τ` on margins.
    pub tolerance: f64,
    /// Multiplies every right-hand side (fault injection in tests).
    pub rhs_scale: f64,
    pub theta_samples: usize,
    pub theta_max_slices: usize,
    pub seed: u64,
    pub pairs: usize,
    /// Relative tolerance of the parabolic Harnack check.
    pub harnack_rel_tol: f64,
    pub path_mesh: PathMesh,
    /// Fixed constant for the implied-constant estimates; `None` reports
    /// `C_min` instead.
    pub constant: Option<f64>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            tolerance: 0.0,
            rhs_scale: 1.0,
            theta_samples: 64,
            theta_max_slices: 64,
            seed: 0,
            pairs: 50,
            harnack_rel_tol: 0.05,
            path_mesh: PathMesh {
                stride: 2,
                slices: 16,
            },
            constant: None,
        }
    }
}

impl<'a, T: Real> Problem<'a, T> {
    fn cylinder(&self, scope: &Scope, factor: f64) -> Cylinder {
        let times = self.sol.times.len();
        match *scope {
            Scope::Global => Cylinder::whole(self.geom, times),
            Scope::Local { x0, radius } => Cylinder::ball(self.geom, x0, lit(factor * radius), times),
        }
    }

    fn bounds(
        &self,
        cyl: &Cylinder,
        norm: Normalization,
    ) -> Result<crate::geometry::FlowBounds<f64>, EstimateError> {
        let region = cyl.to_region(&self.sol.times);
        Ok(self.geom.extract_flow_bounds(&region, norm)?.to_f64())
    }

    fn gamma_delta_f(&self, scope: &Scope) -> Result<f64, EstimateError> {
        match *scope {
            Scope::Global => Ok(0.0),
            Scope::Local { x0, .. } => {
                let t_end = *self.sol.times.last().expect("nonempty");
                Ok(wide(self.geom.gamma_delta_f(x0, t_end)?))
            }
        }
    }

    fn sigma_at(&self, k: usize, i: usize) -> T {
        if self.sigma.is_zero() {
            return T::zero();
        }
        self.sigma
            .value(self.sol.times[k], self.geom.coord(i), self.sol.u[k][i])
    }

    fn point(&self, k: usize, i: usize, lhs: f64, rhs: f64, margin: f64) -> ProbePoint {
        ProbePoint {
            t: wide(self.sol.times[k]),
            node: i,
            x: wide(self.geom.coord(i)),
            lhs,
            rhs,
            margin,
        }
    }
}

fn u_range<T: Real>(sol: &SolutionField<T>, cyl: &Cylinder) -> (f64, f64) {
    (wide(sol.inf_over(cyl)), wide(sol.sup_over(cyl)))
}

/// Shared implied-constant machinery: `lhs <= C · rhs`.
fn implied_constant(report: &mut EstimateReport, mut pts: Vec<ProbePoint>, fixed: Option<f64>) {
    let mut c_min = 0.0f64;
    let mut degenerate = false;
    for p in &pts {
        if p.rhs > 0.0 {
            c_min = c_min.max(p.lhs / p.rhs);
        } else if p.lhs > report.tolerance {
            degenerate = true;
        }
    }
    if degenerate {
        c_min = f64::INFINITY;
        report.notes.push("degenerate bracket: zero right-hand side with nonzero gradient".into());
    }
    report.implied_constant = Some(c_min);
    let c = fixed.unwrap_or(c_min);
    for p in &mut pts {
        p.margin = if c.is_finite() { c * p.rhs - p.lhs } else { -p.lhs };
    }
    report.points = pts;
    report.finish();
    if fixed.is_none() && !c_min.is_finite() {
        report.status = Status::Violation;
        report.violations = report.violations.max(1);
    }
}

/// `|∇u|/u <= C · bracket · (1 − log(u/D))` on `Q_{R/2}` (or everywhere).
pub fn souplet_zhang_check<T: Real>(
    p: &Problem<T>,
    scope: Scope,
    d: Option<T>,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    scope.ensure_fits(p.geom, 1.0)?;
    let sol = p.sol;
    let outer = p.cylinder(&scope, 1.0);
    let probe = p.cylinder(&scope, 0.5).positive_times();
    if probe.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let d = d.unwrap_or_else(|| sol.default_d());
    let bounds = p.bounds(&outer, Normalization::RicciF)?;
    let gdf = p.gamma_delta_f(&scope)?;
    let mut sup_terms = 0.0f64;
    let qf = QField::new(p.q);
    for (k, i) in outer.points() {
        let t = sol.times[k];
        let u = sol.u[k][i];
        let (qv, gq) = qf.point(p.geom, i, t);
        let b = p.sigma.evaluate_bundle(p.geom, t, i, u)?;
        let sz = souplet_zhang_quantities(qv, gq, &b, u, d)?;
        sup_terms = sup_terms.max(wide(sz.n_q + sz.r.sqrt() + sz.p.cbrt()));
    }
    let mut report = EstimateReport::new("souplet-zhang", scope.label(), opts.tolerance);
    let mut pts = Vec::with_capacity(probe.len());
    for (k, i) in probe.points() {
        let t = wide(sol.times[k]);
        let u = sol.u[k][i];
        let lhs = wide(sol.grad_norm(k, i) / u);
        let factor = 1.0 - wide((u / d).ln());
        let rhs = opts.rhs_scale
            * elliptic_bracket(scope.radius(), gdf, t, wide(bounds.k), sup_terms)
            * factor;
        pts.push(p.point(k, i, lhs, rhs, 0.0));
    }
    report.quantity("D", wide(d));
    report.quantity("k", bounds.k);
    report.quantity("gamma_delta_f", gdf);
    report.quantity("sup_nq_r_p", sup_terms);
    implied_constant(&mut report, pts, opts.constant);
    Ok(report)
}

/// `|∇u|/√u <= C · bracket · sup √u`.
pub fn hamilton_check<T: Real>(
    p: &Problem<T>,
    scope: Scope,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    scope.ensure_fits(p.geom, 1.0)?;
    let sol = p.sol;
    let outer = p.cylinder(&scope, 1.0);
    let probe = p.cylinder(&scope, 0.5).positive_times();
    if probe.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let bounds = p.bounds(&outer, Normalization::RicciF)?;
    let gdf = p.gamma_delta_f(&scope)?;
    let mut sup_terms = 0.0f64;
    let qf = QField::new(p.q);
    for (k, i) in outer.points() {
        let t = sol.times[k];
        let u = sol.u[k][i];
        let (qv, gq) = qf.point(p.geom, i, t);
        let b = p.sigma.evaluate_bundle(p.geom, t, i, u)?;
        let h = hamilton_quantities(&b, u);
        let nq = super::quantities::n_q(qv, gq);
        sup_terms = sup_terms.max(wide(nq + h.t.sqrt() + h.s.cbrt()));
    }
    let sup_sqrt = wide(sol.sup_over(&outer)).sqrt();
    let mut report = EstimateReport::new("hamilton", scope.label(), opts.tolerance);
    let mut pts = Vec::with_capacity(probe.len());
    for (k, i) in probe.points() {
        let t = wide(sol.times[k]);
        let u = sol.u[k][i];
        let lhs = wide(sol.grad_norm(k, i) / u.sqrt());
        let rhs = opts.rhs_scale
            * elliptic_bracket(scope.radius(), gdf, t, wide(bounds.k), sup_terms)
            * sup_sqrt;
        pts.push(p.point(k, i, lhs, rhs, 0.0));
    }
    report.quantity("k", bounds.k);
    report.quantity("gamma_delta_f", gdf);
    report.quantity("sup_nq_t_s", sup_terms);
    report.quantity("sup_sqrt_u", sup_sqrt);
    implied_constant(&mut report, pts, opts.constant);
    Ok(report)
}

fn finite_m<T: Real>(geom: &GeometryState<T>) -> Result<f64, EstimateError> {
    match geom.bakry_emery() {
        BakryEmery::Finite(m) => Ok(m),
        BakryEmery::Infinite => Err(EstimateError::Unsupported(
            "the differential Harnack bound needs a finite m",
        )),
    }
}

/// Bounds and `Θ` quantities on `Q_{2R}` for the differential Harnack
/// family.
pub fn li_yau_setup<T: Real>(
    p: &Problem<T>,
    scope: &Scope,
    lambda: f64,
    opts: &CheckOptions,
) -> Result<(crate::geometry::FlowBounds<f64>, LiYauQuantities), EstimateError> {
    let m = finite_m(p.geom)?;
    let outer = p.cylinder(scope, 2.0);
    let bounds = p.bounds(&outer, Normalization::RicciFM)?;
    let (u_lo, u_hi) = u_range(p.sol, &outer);
    let theta = ThetaSampler {
        cylinder: outer,
        u_lo,
        u_hi,
        samples: opts.theta_samples,
        max_slices: opts.theta_max_slices,
    };
    let q = li_yau_quantities(p.geom, p.q, p.sigma, &theta, &bounds, lambda, m)?;
    Ok((bounds, q))
}

fn quantities_into(report: &mut EstimateReport, q: &LiYauQuantities) {
    report.quantity("A", q.a);
    report.quantity("B", q.b);
    report.quantity("gamma1", q.gamma1);
    report.quantity("gamma2", q.gamma2);
    report.quantity("gamma2_qu", q.gamma2_qu);
    report.quantity("gamma3", q.gamma3);
    report.quantity("q_lower", q.q_lower);
}

/// `|∇u|²/(λu²) − ∂ₜu/u + q + Σ/u <= RHS(t)`, checked as
/// `t (RHS − LHS) >= −τ`. `RHS` is the minimum over `epsilons`.
pub fn li_yau_check<T: Real>(
    p: &Problem<T>,
    scope: Scope,
    lambda: f64,
    epsilons: &[f64],
    cut: &CutoffConstants,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    scope.ensure_fits(p.geom, 2.0)?;
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) || epsilons.is_empty() {
        return Err(EstimateError::Parameter("epsilon must lie in (0, 1)"));
    }
    let m = finite_m(p.geom)?;
    let (bounds, q) = li_yau_setup(p, &scope, lambda, opts)?;
    let params: Vec<LiYauParams> = epsilons
        .iter()
        .map(|&epsilon| LiYauParams {
            lambda,
            epsilon,
            m,
            n: p.geom.dim(),
        })
        .collect();
    let sol = p.sol;
    let probe = p.cylinder(&scope, 1.0).positive_times();
    if probe.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let lam = lit::<T>(lambda);
    let qf = QField::new(p.q);
    let mut report = EstimateReport::new("li-yau", scope.label(), opts.tolerance);
    let mut max_t_lhs = f64::NEG_INFINITY;
    for (k, i) in probe.points() {
        let t = sol.times[k];
        let u = sol.u[k][i];
        let g = sol.grad[k][i];
        let (qv, _) = qf.point(p.geom, i, t);
        let lhs = wide(g * g / (lam * u * u) - sol.dt_u[k][i] / u + qv + p.sigma_at(k, i) / u);
        let tf = wide(t);
        let rhs = opts.rhs_scale
            * params
                .iter()
                .map(|pp| li_yau_rhs(&q, &bounds, pp, cut, tf, scope.radius()))
                .fold(f64::INFINITY, f64::min);
        max_t_lhs = max_t_lhs.max(tf * lhs);
        report.points.push(p.point(k, i, lhs, rhs, tf * (rhs - lhs)));
    }
    report.quantity("lambda", lambda);
    report.quantity("m", m);
    report.quantity("max_t_lhs", max_t_lhs);
    quantities_into(&mut report, &q);
    report.finish();
    Ok(report)
}

fn probe_pairs<R: Rng>(rng: &mut R, nodes: &[usize], count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| {
            (
                nodes[rng.gen_range(0..nodes.len())],
                nodes[rng.gen_range(0..nodes.len())],
            )
        })
        .collect()
}

/// `u(x₁, t) <= (eD)^{1−γ} u(x₂, t)^γ` for all node pairs on sampled
/// positive times, in logarithmic form.
pub fn elliptic_harnack_check<T: Real>(
    p: &Problem<T>,
    scope: Scope,
    c: f64,
    d: Option<T>,
    max_slices: usize,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    scope.ensure_fits(p.geom, 1.0)?;
    let sol = p.sol;
    let d = d.unwrap_or_else(|| sol.default_d());
    let outer = p.cylinder(&scope, 1.0);
    let probe = p.cylinder(&scope, 0.5).positive_times();
    if probe.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let bounds = p.bounds(&outer, Normalization::RicciF)?;
    let gdf = p.gamma_delta_f(&scope)?;
    let mut sup_terms = 0.0f64;
    let qf = QField::new(p.q);
    for (k, i) in outer.points() {
        let t = sol.times[k];
        let u = sol.u[k][i];
        let (qv, gq) = qf.point(p.geom, i, t);
        let b = p.sigma.evaluate_bundle(p.geom, t, i, u)?;
        let sz = souplet_zhang_quantities(qv, gq, &b, u, d)?;
        sup_terms = sup_terms.max(wide(sz.n_q + sz.r.sqrt() + sz.p.cbrt()));
    }
    let log_ed = 1.0 + wide(d.ln());
    let stride = probe.slices.len().div_ceil(max_slices.max(1)).max(1);
    let mut report = EstimateReport::new("elliptic-harnack", scope.label(), opts.tolerance);
    let mut margins = Vec::new();
    let mut worst = f64::INFINITY;
    for (k, nodes) in probe.slices.iter().step_by(stride) {
        let t = sol.times[*k];
        let bracket = elliptic_bracket(scope.radius(), gdf, wide(t), wide(bounds.k), sup_terms);
        for &i1 in nodes {
            for &i2 in nodes {
                let dist = wide(p.geom.geodesic_distance(i1, i2, t));
                let gamma = harnack_elliptic_gamma(dist, bracket, c);
                let l1 = wide(sol.u[*k][i1].ln());
                let l2 = wide(sol.u[*k][i2].ln());
                let m = (1.0 - gamma) * log_ed + gamma * l2 - l1;
                worst = worst.min(m);
                margins.push(m);
            }
        }
    }
    report.quantity("C", c);
    report.quantity("worst_log_margin", worst);
    report.finish_with(&margins);
    Ok(report)
}

/// `u(x₂,t₂) >= u(x₁,t₁)(t₂/t₁)^{−mλ} e^{−λL} e^{(t₂−t₁)S}` on random pairs
/// with `t₂ >= 1.5 t₁`; margins are `u(x₂,t₂)/bound − 1`.
pub fn parabolic_harnack_check<T: Real>(
    p: &Problem<T>,
    scope: Scope,
    lambda: f64,
    epsilons: &[f64],
    cut: &CutoffConstants,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    scope.ensure_fits(p.geom, 2.0)?;
    let m = finite_m(p.geom)?;
    let (bounds, q) = li_yau_setup(p, &scope, lambda, opts)?;
    let s = epsilons
        .iter()
        .map(|&epsilon| {
            let pp = LiYauParams {
                lambda,
                epsilon,
                m,
                n: p.geom.dim(),
            };
            harnack_s(&q, &bounds, &pp, cut, scope.radius())
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let sol = p.sol;
    let probe = p.cylinder(&scope, 1.0);
    // Nodes inside the ball at every time: the path space.
    let mut nodes: Vec<usize> = (0..p.geom.grid().nx).collect();
    for (_, n) in &probe.slices {
        nodes.retain(|i| n.contains(i));
    }
    if nodes.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let times: Vec<f64> = sol.times.iter().map(|&t| wide(t)).collect();
    let t_end = *times.last().unwrap();
    let first: Vec<usize> = (1..times.len()).filter(|&k| 1.5 * times[k] <= t_end).collect();
    if first.is_empty() {
        return Err(EstimateError::EmptyProbeSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = EstimateReport::new("parabolic-harnack", scope.label(), opts.harnack_rel_tol);
    let ml = m * lambda;
    for (x1, x2) in probe_pairs(&mut rng, &nodes, opts.pairs) {
        let k1 = first[rng.gen_range(0..first.len())];
        let later: Vec<usize> = (k1 + 1..times.len())
            .filter(|&k| times[k] >= 1.5 * times[k1])
            .collect();
        let k2 = later[rng.gen_range(0..later.len())];
        let (t1, t2) = (times[k1], times[k2]);
        let l = path_energy_l(p.geom, x1, x2, t1, t2, &nodes, opts.path_mesh)?;
        let u1 = wide(sol.u[k1][x1]);
        let u2 = wide(sol.u[k2][x2]);
        let bound = u1 * (t2 / t1).powf(-ml) * (-lambda * l).exp() * ((t2 - t1) * s).exp();
        report.points.push(ProbePoint {
            t: t2,
            node: x2,
            x: wide(p.geom.coord(x2)),
            lhs: u2,
            rhs: bound,
            margin: u2 / bound - 1.0,
        });
    }
    report.quantity("S", s);
    report.quantity("lambda", lambda);
    quantities_into(&mut report, &q);
    report.finish();
    Ok(report)
}

/// Why the global Hamilton bound does not apply, if it does not.
pub fn hamilton_global_hypotheses<T: Real>(p: &Problem<T>) -> Vec<String> {
    let mut why = Vec::new();
    if !p.geom.is_closed() {
        why.push("geometry is not closed".into());
    }
    if !p.q.is_zero() {
        why.push("q is not identically zero".into());
    }
    if !p.sigma.is_zero() {
        let two = lit::<T>(2.0);
        let slack = lit::<T>(-1e-12);
        let mut bad_sign = false;
        let mut bad_growth = false;
        for k in 0..p.sol.u.len() {
            let t = p.sol.times[k];
            for i in 0..p.geom.grid().nx {
                let (x, u) = (p.geom.coord(i), p.sol.u[k][i]);
                let s = p.sigma.value(t, x, u);
                bad_sign |= s < slack;
                bad_growth |= s - two * u * p.sigma.d_u(t, x, u) < slack;
            }
        }
        if bad_sign {
            why.push("reaction term is negative somewhere along the solution".into());
        }
        if bad_growth {
            why.push("Σ − 2uΣ_u is negative somewhere along the solution".into());
        }
    }
    why
}

fn super_flow_k<T: Real>(p: &Problem<T>) -> Result<f64, EstimateError> {
    let region = Cylinder::whole(p.geom, p.sol.times.len()).to_region(&p.sol.times);
    Ok(wide(
        p.geom
            .extract_flow_bounds(&region, Normalization::RicciF)?
            .super_flow_k_pos(),
    ))
}

/// `t|∇log u|² <= (1 + 2𝗄t)(1 + log(D/u))` at every node and positive
/// time, gated on its hypotheses.
pub fn hamilton_global_check<T: Real>(
    p: &Problem<T>,
    d: Option<T>,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    let why = hamilton_global_hypotheses(p);
    if !why.is_empty() {
        return Ok(EstimateReport::hypotheses_unmet("hamilton-global", "global", opts.tolerance, why));
    }
    let sol = p.sol;
    let d = wide(d.unwrap_or_else(|| sol.sup()));
    let kk = super_flow_k(p)?;
    let mut report = EstimateReport::new("hamilton-global", "global", opts.tolerance);
    for k in 1..sol.u.len() {
        let t = wide(sol.times[k]);
        for i in 0..p.geom.grid().nx {
            let u = wide(sol.u[k][i]);
            let g = wide(sol.grad[k][i]) / u;
            let lhs = t * g * g;
            let rhs = opts.rhs_scale * (1.0 + 2.0 * kk * t) * (1.0 + (d / u).ln());
            report.points.push(p.point(k, i, lhs, rhs, rhs - lhs));
        }
    }
    report.quantity("D", d);
    report.quantity("super_flow_k", kk);
    report.finish();
    Ok(report)
}

/// Interpolation consequence of the global Hamilton bound, for each `s` on
/// random `(x₁, x₂, t)`, in logarithmic form.
pub fn harnack_interpolation_check<T: Real>(
    p: &Problem<T>,
    d: Option<T>,
    s_values: &[f64],
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    let why = hamilton_global_hypotheses(p);
    if !why.is_empty() {
        return Ok(EstimateReport::hypotheses_unmet(
            "harnack-interpolation",
            "global",
            opts.tolerance,
            why,
        ));
    }
    let sol = p.sol;
    let d = wide(d.unwrap_or_else(|| sol.sup()));
    let kk = super_flow_k(p)?;
    let nodes: Vec<usize> = (0..p.geom.grid().nx).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x1f);
    let mut report = EstimateReport::new("harnack-interpolation", "global", opts.tolerance);
    for (x1, x2) in probe_pairs(&mut rng, &nodes, opts.pairs) {
        let k = rng.gen_range(1..sol.u.len());
        let t = sol.times[k];
        let tf = wide(t);
        let dist = wide(p.geom.geodesic_distance(x1, x2, t));
        let l1 = wide(sol.u[k][x1].ln());
        let l2 = wide(sol.u[k][x2].ln());
        for &s in s_values {
            let rhs = s / (1.0 + s) * (1.0 + d.ln())
                + dist * dist * (1.0 + 2.0 * kk * tf) / (4.0 * s * tf)
                + l2 / (1.0 + s);
            report.points.push(p.point(k, x1, l1, rhs, rhs - l1));
        }
    }
    report.quantity("D", d);
    report.quantity("super_flow_k", kk);
    report.finish();
    Ok(report)
}

/// `max_x F_γ[u](·, t) <= 0` with `γ(t) = t/(1 + 2𝗄t)`, where the
/// logarithm is taken against `eD`.
pub fn f_gamma_check<T: Real>(
    p: &Problem<T>,
    d: Option<T>,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    let why = hamilton_global_hypotheses(p);
    if !why.is_empty() {
        return Ok(EstimateReport::hypotheses_unmet("f-gamma", "global", opts.tolerance, why));
    }
    let sol = p.sol;
    let d = d.unwrap_or_else(|| sol.sup());
    let kk = super_flow_k(p)?;
    let ed = d * T::one().exp();
    let fields = crate::solver::derived_fields(sol, p.geom, p.sigma, ed, lit(1.5), lit(1.0 / 3.0), lit(kk))
        .map_err(|_| EstimateError::Parameter("D below sup u"))?;
    let mut report = EstimateReport::new("f-gamma", "global", opts.tolerance);
    let mut worst = f64::NEG_INFINITY;
    for k in 1..sol.u.len() {
        let max = fields.f_gamma[k].iter().map(|&v| wide(v)).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(max);
        report.points.push(ProbePoint {
            t: wide(sol.times[k]),
            node: 0,
            x: 0.0,
            lhs: max,
            rhs: 0.0,
            margin: -max,
        });
    }
    report.quantity("max_f_gamma", worst);
    report.finish();
    Ok(report)
}

/// Which constancy statement is being tested.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiouvilleMode {
    /// `Ric_f >= 0` and `Σ − 2uΣ_u >= 0`.
    GradientBound,
    /// `Ric_f^m >= 0`, `Σ >= 0`, `Σ − uΣ_u >= 0`, `Σ − uΣ_u + λu²Σ_uu >= 0`.
    DifferentialHarnack,
}

/// Failed hypotheses of the chosen constancy statement, with the reaction
/// predicates evaluated at each value in `u_values`.
pub fn liouville_predicates<T: Real>(
    geom: &GeometryState<T>,
    sigma: &NonlinearitySpec,
    mode: LiouvilleMode,
    lambda: f64,
    u_values: &[T],
) -> Result<Vec<String>, EstimateError> {
    let mut why = Vec::new();
    if !geom.is_static() {
        why.push("metric and potential must be static".into());
        return Ok(why);
    }
    if sigma.depends_on_t() || sigma.depends_on_x() {
        why.push("reaction term must depend on u only".into());
        return Ok(why);
    }
    let slack = lit::<T>(-1e-12);
    let mut min_ric = T::infinity();
    for i in 0..geom.grid().nx {
        let ric = match mode {
            LiouvilleMode::GradientBound => geom.ricci_f(i, T::zero())?,
            LiouvilleMode::DifferentialHarnack => {
                if geom.bakry_emery().finite().is_none() {
                    why.push("m must be finite".into());
                    return Ok(why);
                }
                geom.ricci_f_m(i, T::zero())?
            }
        };
        min_ric = min_ric.min(ric.min_eig());
    }
    if min_ric < slack {
        why.push(format!("curvature lower bound fails: min eigenvalue {}", wide(min_ric)));
    }
    let lam = lit::<T>(lambda);
    let two = lit::<T>(2.0);
    let z = T::zero();
    let mut fails = [false; 4];
    for &u in u_values {
        let s = sigma.value(z, z, u);
        let su = sigma.d_u(z, z, u);
        let suu = sigma.d_uu(z, z, u);
        match mode {
            LiouvilleMode::GradientBound => fails[0] |= s - two * u * su < slack,
            LiouvilleMode::DifferentialHarnack => {
                fails[1] |= s < slack;
                fails[2] |= s - u * su < slack;
                fails[3] |= s - u * su + lam * u * u * suu < slack;
            }
        }
    }
    let labels = [
        "Σ − 2uΣ_u >= 0 fails",
        "Σ >= 0 fails",
        "Σ − uΣ_u >= 0 fails",
        "Σ − uΣ_u + λu²Σ_uu >= 0 fails",
    ];
    for (f, l) in fails.iter().zip(labels) {
        if *f {
            why.push(l.to_string());
        }
    }
    Ok(why)
}

/// Constancy of a stationary solution, plus the pointwise elliptic
/// differential Harnack bound when `Ric_f^m >= 0`.
pub fn liouville_check<T: Real>(
    p: &Problem<T>,
    mode: LiouvilleMode,
    lambda: f64,
    epsilon: f64,
    osc_tol: f64,
    opts: &CheckOptions,
) -> Result<EstimateReport, EstimateError> {
    let sol = p.sol;
    let u = &sol.u[0];
    let name = match mode {
        LiouvilleMode::GradientBound => "liouville-gradient-bound",
        LiouvilleMode::DifferentialHarnack => "liouville-differential-harnack",
    };
    let why = liouville_predicates(p.geom, p.sigma, mode, lambda, u)?;
    if !why.is_empty() {
        return Ok(EstimateReport::hypotheses_unmet(name, "global", opts.tolerance, why));
    }
    let mut report = EstimateReport::new(name, "global", opts.tolerance);
    let osc = wide(sol.final_oscillation());
    report.quantity("oscillation", osc);

    let curvature_ok = p.geom.bakry_emery().finite().is_some()
        && liouville_predicates(
            p.geom,
            &NonlinearitySpec::zero(),
            LiouvilleMode::DifferentialHarnack,
            lambda,
            &[],
        )?
        .is_empty();
    if curvature_ok {
        let m = p.geom.bakry_emery().finite().unwrap();
        let lam = lit::<T>(lambda);
        let z = T::zero();
        let lo = wide(sol.inf());
        let hi = wide(sol.sup());
        let mut sup1 = 0.0f64;
        let mut sup2 = 0.0f64;
        for j in 0..=opts.theta_samples.max(1) {
            let uv = lit::<T>(lo + (hi - lo) * j as f64 / opts.theta_samples.max(1) as f64);
            let s = p.sigma.value(z, z, uv);
            let su = p.sigma.d_u(z, z, uv);
            let suu = p.sigma.d_uu(z, z, uv);
            sup1 = sup1.max(wide(-(s - uv * su) / uv));
            sup2 = sup2.max(wide(-(s - uv * su + lam * uv * uv * suu) / uv));
        }
        let rhs = m * lambda * super::quantities::inflate_sup(sup1)
            + m * lambda / (1.0 - epsilon).sqrt() / (2.0 * (lambda - 1.0))
                * super::quantities::inflate_sup(sup2);
        let rhs = opts.rhs_scale * rhs;
        for (i, &ui) in u.iter().enumerate() {
            let g = sol.grad[0][i];
            let lhs = wide(g * g / (lam * ui * ui) + p.sigma.value(z, z, ui) / ui);
            report.points.push(p.point(0, i, lhs, rhs, rhs - lhs));
        }
    } else {
        report
            .notes
            .push("pointwise bound skipped: Ric_f^m >= 0 not available".into());
    }
    report.finish();
    if !(osc <= osc_tol) {
        report.violations += 1;
        report.status = Status::Violation;
        report.notes.push(format!("solution not constant: oscillation {osc}"));
    }
    Ok(report)
}
