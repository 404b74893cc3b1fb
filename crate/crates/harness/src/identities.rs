//! Residuals of the pointwise evolution identities on manufactured
//! solutions.
//!
//! The manufactured `u(t, x)` solves the equation exactly once a forcing
//! `F(t, x)` is added to the reaction term. Left-hand sides are evaluated
//! with the discrete operators on exactly sampled fields, right-hand sides
//! from symbolic derivatives and the geometry's curvature tensors, so the
//! residual measures the consistency of the discrete operators with the
//! identity and must shrink at second order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use harnack_core::expr::{add, call, div, mul, pow, sub, Func};
use harnack_core::{BakryEmery, Expr, Family, Geometry, Var, WarpTopology};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const MIN_ORDER: f64 = 1.5;
/// Residuals below this on both levels count as exact.
pub const EXACT_FLOOR: f64 = 1e-9;

const D: f64 = 4.0;
const BETA: f64 = 1.0 / 3.0;
const LAMBDA: f64 = 1.5;
const PROBE_TIMES: [f64; 3] = [0.3, 0.5, 0.7];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityGeometry {
    TorusStatic,
    TorusConformal,
    WarpedEvolving,
    WarpedHyperbolic,
}

impl IdentityGeometry {
    pub const ALL: [IdentityGeometry; 4] = [
        IdentityGeometry::TorusStatic,
        IdentityGeometry::TorusConformal,
        IdentityGeometry::WarpedEvolving,
        IdentityGeometry::WarpedHyperbolic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityGeometry::TorusStatic => "torus-static",
            IdentityGeometry::TorusConformal => "torus-conformal",
            IdentityGeometry::WarpedEvolving => "warped-evolving",
            IdentityGeometry::WarpedHyperbolic => "warped-hyperbolic",
        }
    }

    fn family(self) -> (Family, &'static str, BakryEmery) {
        let torus = |sigma: &str| Family::ConformalTorus {
            n: 2,
            sigma: parse(sigma),
            length: 2.0 * PI,
        };
        let warped = |warp: &str, r_min, r_max| Family::Warped {
            warp: parse(warp),
            topology: WarpTopology::Annulus,
            r_min,
            r_max,
        };
        match self {
            IdentityGeometry::TorusStatic => (torus("1"), "0", BakryEmery::Finite(2.0)),
            IdentityGeometry::TorusConformal => {
                (torus("exp(-t)"), "0.2*cos(x)*(1+t)", BakryEmery::Finite(3.0))
            }
            IdentityGeometry::WarpedEvolving => (
                warped("(1+0.3*t)*sin(r)", 0.4, PI - 0.4),
                "0.1*r^2*(1+t)",
                BakryEmery::Finite(3.0),
            ),
            IdentityGeometry::WarpedHyperbolic => {
                (warped("sinh(r)", 0.5, 2.5), "0.1*r^2", BakryEmery::Finite(3.0))
            }
        }
    }

    fn default_solution(self) -> &'static str {
        match self {
            IdentityGeometry::TorusStatic | IdentityGeometry::TorusConformal => {
                "2 + sin(x)*cos(t) + 0.3*cos(2*x)"
            }
            _ => "2 + 0.5*sin(2*r)*cos(t) + 0.3*r",
        }
    }
}

impl fmt::Display for IdentityGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdentityGeometry {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IdentityGeometry::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown identity geometry '{s}'")))
    }
}

fn parse(s: &str) -> Expr {
    Expr::parse(s).expect("built-in expression")
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityKind {
    Equality,
    /// One-sided; the residual is the positive part of the violation.
    Inequality,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Identity {
    HLogRatio,
    WEvolution,
    WInequality,
    UBeta,
    GradUBeta,
    HGradProduct,
    LaplacianEvolution,
    WeightedLaplacianEvolution,
    HarnackQuantity,
    Bochner,
    BochnerCd,
}

impl Identity {
    const ALL: [Identity; 11] = [
        Identity::HLogRatio,
        Identity::WEvolution,
        Identity::WInequality,
        Identity::UBeta,
        Identity::GradUBeta,
        Identity::HGradProduct,
        Identity::LaplacianEvolution,
        Identity::WeightedLaplacianEvolution,
        Identity::HarnackQuantity,
        Identity::Bochner,
        Identity::BochnerCd,
    ];

    fn name(self) -> &'static str {
        match self {
            Identity::HLogRatio => "h-log-ratio",
            Identity::WEvolution => "w-evolution",
            Identity::WInequality => "w-inequality",
            Identity::UBeta => "u-beta",
            Identity::GradUBeta => "grad-u-beta",
            Identity::HGradProduct => "h-grad-product",
            Identity::LaplacianEvolution => "laplacian-evolution",
            Identity::WeightedLaplacianEvolution => "weighted-laplacian-evolution",
            Identity::HarnackQuantity => "harnack-quantity",
            Identity::Bochner => "bochner",
            Identity::BochnerCd => "bochner-cd",
        }
    }

    fn kind(self) -> IdentityKind {
        match self {
            Identity::WInequality | Identity::BochnerCd => IdentityKind::Inequality,
            _ => IdentityKind::Equality,
        }
    }
}

/// An expression with its first and second chart derivatives.
struct Sym {
    e: Expr,
    x: Expr,
    xx: Expr,
}

impl Sym {
    fn new(e: Expr) -> Self {
        let x = e.diff(Var::X);
        let xx = x.diff(Var::X);
        Sym { e, x, xx }
    }
}

/// Geometry data at one probe point.
struct Pt {
    t: f64,
    x: f64,
    a: f64,
    kappa: f64,
    fx: f64,
    ftx: f64,
    ric: [f64; 2],
    ricm: [f64; 2],
    v: [f64; 2],
    div: f64,
    grad_trace: f64,
}

/// Frame derivatives of a radial field at a point.
struct Loc {
    v: f64,
    g: f64,
    h11: f64,
    h22: f64,
}

impl Loc {
    fn lap(&self) -> f64 {
        self.h11 + self.h22
    }

    fn hess_sq(&self) -> f64 {
        self.h11 * self.h11 + self.h22 * self.h22
    }
}

/// Symbolic fields of one manufactured case.
struct Fields {
    u: Sym,
    h: Sym,
    w: Sym,
    hb: Sym,
    gb: Sym,
    hgb: Sym,
    box_hb: Sym,
    hl: Sym,
    hl_t: Sym,
    gsq_hl: Sym,
    lapf_hl: Sym,
    psi: Sym,
    psi_b: Sym,
    g: Sym,
    st: Expr,
    st_u: Expr,
    st_x: Expr,
    m: f64,
    n: usize,
    f_constant: bool,
}

struct Calculus {
    a: Expr,
    warp: Option<Expr>,
    f: Expr,
}

impl Calculus {
    fn grad(&self, e: &Expr) -> Expr {
        div(e.diff(Var::X), self.a.clone())
    }

    fn norm_sq(&self, e: &Expr) -> Expr {
        pow(self.grad(e), c(2.0))
    }

    fn lap_f(&self, e: &Expr) -> Expr {
        let ex = e.diff(Var::X);
        let exx = ex.diff(Var::X);
        let fx = self.f.diff(Var::X);
        match &self.warp {
            None => div(sub(exx, mul(fx, ex)), pow(self.a.clone(), c(2.0))),
            Some(w) => add(exx, mul(sub(div(w.diff(Var::X), w.clone()), fx), ex)),
        }
    }
}

/// A manufactured solution on a model geometry.
#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub geometry: IdentityGeometry,
    pub solution: Expr,
    /// Catalog reaction term `Σ(t, x, u)` before forcing.
    pub reaction: Expr,
}

impl ManufacturedCase {
    pub fn standard(geometry: IdentityGeometry) -> Self {
        ManufacturedCase {
            geometry,
            solution: parse(geometry.default_solution()),
            reaction: parse("0.5*(1 + 0.2*sin(x))*u*log(u)"),
        }
    }

    fn fields(&self) -> Fields {
        let (family, f_src, m) = self.geometry.family();
        let f = parse(f_src);
        let (calc, n) = match &family {
            Family::ConformalTorus { n, sigma, .. } => (
                Calculus {
                    a: sigma.clone(),
                    warp: None,
                    f: f.clone(),
                },
                *n,
            ),
            Family::Warped { warp, .. } => (
                Calculus {
                    a: c(1.0),
                    warp: Some(warp.clone()),
                    f: f.clone(),
                },
                2,
            ),
        };
        let u = self.solution.clone();
        let uu = Var::U;
        let reaction_on_u = self.reaction.substitute(uu, &u);
        let forcing = sub(sub(u.diff(Var::T), calc.lap_f(&u)), reaction_on_u);
        let st = add(self.reaction.clone(), forcing);
        let st_sub = st.substitute(uu, &u);

        let h = call(Func::Log, div(u.clone(), c(D)));
        let one_minus_h = sub(c(1.0), h.clone());
        let w = div(calc.norm_sq(&h), pow(one_minus_h, c(2.0)));
        let hb = pow(u.clone(), c(BETA));
        let gb = calc.norm_sq(&hb);
        let hgb = mul(hb.clone(), gb.clone());
        let box_hb = sub(hb.diff(Var::T), calc.lap_f(&hb));
        let hl = call(Func::Log, u.clone());
        let gsq_hl = calc.norm_sq(&hl);
        let lapf_hl = calc.lap_f(&hl);
        let psi = div(st_sub.clone(), u.clone());
        let psi_b = mul(pow(u.clone(), c(BETA - 1.0)), st_sub);
        let g = mul(
            Expr::var(Var::T),
            add(
                sub(gsq_hl.clone(), mul(c(LAMBDA), hl.diff(Var::T))),
                mul(c(LAMBDA), psi.clone()),
            ),
        );
        Fields {
            u: Sym::new(u),
            h: Sym::new(h),
            w: Sym::new(w),
            hb: Sym::new(hb),
            gb: Sym::new(gb),
            hgb: Sym::new(hgb),
            box_hb: Sym::new(box_hb),
            hl_t: Sym::new(hl.diff(Var::T)),
            hl: Sym::new(hl),
            gsq_hl: Sym::new(gsq_hl),
            lapf_hl: Sym::new(lapf_hl),
            psi: Sym::new(psi),
            psi_b: Sym::new(psi_b),
            g: Sym::new(g),
            st_u: st.diff(uu),
            st_x: st.diff(Var::X),
            st,
            m: m.finite().unwrap_or(f64::INFINITY),
            n,
            f_constant: !f.depends_on(Var::X),
        }
    }

    fn geometry_at(&self, nx: usize, nt: usize) -> Result<Geometry, HarnessError> {
        let (family, f, m) = self.geometry.family();
        Geometry::new(family, parse(f), nx, nt, 1.0, m)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

struct Level<'a> {
    geom: &'a Geometry,
    fs: &'a Fields,
    delta: f64,
}

impl Level<'_> {
    fn point(&self, i: usize, t: f64) -> Result<Pt, HarnessError> {
        let g = self.geom;
        let x = g.coord(i);
        let ric = g.ricci_f(i, t).map_err(geom_err)?;
        let ricm = g.ricci_f_m(i, t).map_err(geom_err)?;
        let ms = g.metric_speed_tensor(i, t).map_err(geom_err)?;
        Ok(Pt {
            t,
            x,
            a: g.scale(t),
            kappa: g.kappa_at(x, t),
            fx: g.grad_f_at(x, t),
            ftx: g.grad_ft_at(x, t),
            ric: ric.diag,
            ricm: ricm.diag,
            v: ms.v.diag,
            div: ms.div,
            grad_trace: ms.grad_trace,
        })
    }

    fn loc(&self, s: &Sym, p: &Pt) -> Loc {
        let g = s.x.at(p.t, p.x, 0.0) / p.a;
        Loc {
            v: s.e.at(p.t, p.x, 0.0),
            g,
            h11: s.xx.at(p.t, p.x, 0.0) / (p.a * p.a),
            h22: p.kappa * g,
        }
    }

    fn sample(&self, e: &Expr, j: usize, t: f64) -> f64 {
        e.at(t, self.geom.coord(j), 0.0)
    }

    fn lap_f_d(&self, e: &Expr, i: usize, t: f64) -> f64 {
        self.geom.witten_laplacian_at(i, t, |j| self.sample(e, j, t))
    }

    fn lap_d(&self, e: &Expr, i: usize, t: f64) -> f64 {
        let (l, r) = self.geom.grid().neighbors(i);
        let grad = (self.sample(e, r, t) - self.sample(e, l, t))
            / (2.0 * self.geom.grid().dx * self.geom.scale(t));
        self.lap_f_d(e, i, t) + self.geom.grad_f_at(self.geom.coord(i), t) * grad
    }

    fn dt_c(&self, f: impl Fn(f64) -> f64, t: f64) -> f64 {
        (f(t + self.delta) - f(t - self.delta)) / (2.0 * self.delta)
    }

    fn heat_d(&self, s: &Sym, i: usize, t: f64) -> f64 {
        let x = self.geom.coord(i);
        self.dt_c(|s_t| s.e.at(s_t, x, 0.0), t) - self.lap_f_d(&s.e, i, t)
    }

    /// `(lhs, rhs)`; for inequalities `lhs <= rhs` is the claim.
    fn eval(&self, id: Identity, i: usize, t: f64) -> Result<(f64, f64), HarnessError> {
        let fs = self.fs;
        let p = self.point(i, t)?;
        let u = fs.u.e.at(t, p.x, 0.0);
        let st = fs.st.at(t, p.x, u);
        let st_u = fs.st_u.at(t, p.x, u);
        let st_x = fs.st_x.at(t, p.x, u) / p.a;
        Ok(match id {
            Identity::HLogRatio => {
                let h = self.loc(&fs.h, &p);
                (self.heat_d(&fs.h, i, t), h.g * h.g + st / u)
            }
            Identity::WEvolution | Identity::WInequality => {
                let h = self.loc(&fs.h, &p);
                let w = self.loc(&fs.w, &p);
                let om = 1.0 - h.v;
                let common = -2.0 * h.v * h.g * w.g / om - 2.0 * om * w.v * w.v
                    + 2.0 * h.g * st_x / (u * om * om)
                    + 2.0 * w.v * (st_u + h.v * st / (u * om));
                let rhs = if id == Identity::WEvolution {
                    let t11 = h.h11 / om + h.g * h.g / (om * om);
                    let t22 = h.h22 / om;
                    common - 2.0 * (p.v[0] + p.ric[0]) * h.g * h.g / (om * om)
                        - 2.0 * (t11 * t11 + t22 * t22)
                } else {
                    let flow = [p.v[0] + p.ric[0], p.v[1] + p.ric[1]];
                    let min = if fs.n == 2 { flow[0].min(flow[1]) } else { flow[0] };
                    common - 2.0 * min * w.v
                };
                (self.heat_d(&fs.w, i, t), rhs)
            }
            Identity::UBeta => {
                let hb = self.loc(&fs.hb, &p);
                let rhs = (1.0 - BETA) * hb.g * hb.g / (BETA * hb.v) + BETA * u.powf(BETA - 1.0) * st;
                (self.heat_d(&fs.hb, i, t), rhs)
            }
            Identity::GradUBeta => {
                let hb = self.loc(&fs.hb, &p);
                let gb = self.loc(&fs.gb, &p);
                let pb = self.loc(&fs.psi_b, &p);
                let g2 = hb.g * hb.g;
                let rhs = -2.0 * (p.v[0] + p.ric[0]) * g2 - 2.0 * hb.hess_sq()
                    + 2.0 * (BETA - 1.0) / (BETA * hb.v * hb.v) * (g2 * g2 - hb.v * hb.g * gb.g)
                    + 2.0 * BETA * hb.g * pb.g;
                (self.heat_d(&fs.gb, i, t), rhs)
            }
            Identity::HGradProduct => {
                let hb = self.loc(&fs.hb, &p);
                let gb = self.loc(&fs.gb, &p);
                let bx = self.loc(&fs.box_hb, &p);
                let g2 = hb.g * hb.g;
                let rhs = -2.0 * hb.v * hb.hess_sq() + 2.0 * hb.v * hb.g * bx.g
                    - 2.0 * hb.v * p.ric[0] * g2
                    + g2 * bx.v
                    - 2.0 * hb.g * gb.g
                    - 2.0 * hb.v * p.v[0] * g2;
                (self.heat_d(&fs.hgb, i, t), rhs)
            }
            Identity::LaplacianEvolution | Identity::WeightedLaplacianEvolution => {
                let h = self.loc(&fs.hl, &p);
                let ht = self.loc(&fs.hl_t, &p);
                let vh = p.v[0] * h.h11 + p.v[1] * h.h22;
                let drift = (2.0 * p.div - p.grad_trace) * h.g;
                if id == Identity::LaplacianEvolution {
                    let lhs = self.dt_c(|s| self.lap_d(&fs.hl.e, i, s), t);
                    (lhs, ht.lap() - 2.0 * vh - drift)
                } else {
                    let lhs = self.dt_c(|s| self.lap_f_d(&fs.hl.e, i, s), t);
                    let rhs = ht.lap() - p.fx * ht.g - 2.0 * vh - drift - p.ftx * h.g
                        + 2.0 * p.v[0] * p.fx * h.g;
                    (lhs, rhs)
                }
            }
            Identity::HarnackQuantity => {
                let h = self.loc(&fs.hl, &p);
                let g = self.loc(&fs.g, &p);
                let psi = self.loc(&fs.psi, &p);
                let lam = LAMBDA;
                let g2 = h.g * h.g;
                let dim_term = if fs.m.is_finite() && fs.m > fs.n as f64 {
                    2.0 * t * (p.fx * h.g).powi(2) / (fs.m - fs.n as f64)
                } else {
                    debug_assert!(fs.f_constant || fs.m.is_infinite());
                    0.0
                };
                let rhs = 2.0 * h.g * g.g - 2.0 * t * h.hess_sq() - 2.0 * t * p.ricm[0] * g2
                    + 2.0 * t * (lam - 1.0) * p.v[0] * g2
                    - dim_term
                    + g.v / t
                    + 2.0 * lam * t
                        * (p.v[0] * h.h11 + p.v[1] * h.h22 + (p.div - 0.5 * p.grad_trace) * h.g)
                    + lam * t * (p.ftx * h.g - 2.0 * p.v[0] * p.fx * h.g)
                    - 2.0 * t * (lam - 1.0) * h.g * psi.g
                    - lam * t * (psi.lap() - p.fx * psi.g);
                (self.heat_d(&fs.g, i, t), rhs)
            }
            Identity::Bochner | Identity::BochnerCd => {
                let h = self.loc(&fs.hl, &p);
                let lf = self.loc(&fs.lapf_hl, &p);
                let half = 0.5 * self.lap_f_d(&fs.gsq_hl.e, i, t);
                if id == Identity::Bochner {
                    (half, h.hess_sq() + h.g * lf.g + p.ric[0] * h.g * h.g)
                } else {
                    // Curvature-dimension form: lhs >= rhs, flipped to lhs <= rhs.
                    let lhs = half - h.g * lf.g;
                    let rhs = lf.v * lf.v / fs.m + p.ricm[0] * h.g * h.g;
                    (rhs, lhs)
                }
            }
        })
    }

    fn residual(&self, id: Identity) -> Result<f64, HarnessError> {
        let nx = self.geom.grid().nx;
        let lo = (0.1 * nx as f64).ceil() as usize;
        let hi = (0.9 * nx as f64).floor() as usize;
        let mut worst = 0.0f64;
        for &t in &PROBE_TIMES {
            for i in lo..=hi.min(nx - 1) {
                let (lhs, rhs) = self.eval(id, i, t)?;
                let r = match id.kind() {
                    IdentityKind::Equality => (lhs - rhs).abs(),
                    IdentityKind::Inequality => (lhs - rhs).max(0.0),
                };
                if !r.is_finite() {
                    return Err(HarnessError::Numerical(format!(
                        "{} residual is not finite at node {i}, t = {t}",
                        id.name()
                    )));
                }
                worst = worst.max(r);
            }
        }
        Ok(worst)
    }
}

fn geom_err(e: harnack_core::geometry::GeometryError) -> HarnessError {
    HarnessError::Numerical(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub identity: String,
    pub geometry: String,
    pub kind: IdentityKind,
    pub coarse: f64,
    pub fine: f64,
    pub order: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitySuite {
    pub coarse_nx: usize,
    pub fine_nx: usize,
    pub rows: Vec<IdentityResidual>,
}

impl IdentitySuite {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

fn judge(kind: IdentityKind, coarse: f64, fine: f64) -> (Option<f64>, bool) {
    if coarse <= EXACT_FLOOR && fine <= EXACT_FLOOR {
        return (None, true);
    }
    let order = (coarse / fine).log2();
    let order = if fine > 0.0 { Some(order) } else { None };
    let passed = match kind {
        IdentityKind::Equality => fine <= EXACT_FLOOR || order.map_or(false, |o| o >= MIN_ORDER),
        IdentityKind::Inequality => fine <= EXACT_FLOOR || order.map_or(true, |o| o >= MIN_ORDER),
    };
    (order, passed)
}

/// Residuals of every identity for one manufactured case at `base` and
/// `2 · base` space and time steps.
pub fn case_residuals(case: &ManufacturedCase, base: usize) -> Result<Vec<IdentityResidual>, HarnessError> {
    let fs = case.fields();
    let coarse = case.geometry_at(base, base)?;
    let fine = case.geometry_at(2 * base, 2 * base)?;
    let levels = [&coarse, &fine].map(|geom| Level {
        geom,
        fs: &fs,
        delta: geom.grid().dt(),
    });
    let mut rows = Vec::new();
    for id in Identity::ALL {
        let r0 = levels[0].residual(id)?;
        let r1 = levels[1].residual(id)?;
        let (order, passed) = judge(id.kind(), r0, r1);
        rows.push(IdentityResidual {
            identity: id.name().to_string(),
            geometry: case.geometry.name().to_string(),
            kind: id.kind(),
            coarse: r0,
            fine: r1,
            order,
            passed,
        });
    }
    Ok(rows)
}

/// The identity suite on the standard manufactured solutions.
pub fn identity_residual_suite(geometries: &[IdentityGeometry], base: usize) -> Result<IdentitySuite, HarnessError> {
    if geometries.is_empty() {
        return Err(HarnessError::Config("no geometries selected".into()));
    }
    if base < 8 {
        return Err(HarnessError::Config("identity suite needs at least 8 nodes".into()));
    }
    let mut rows = Vec::new();
    for &g in geometries {
        rows.extend(case_residuals(&ManufacturedCase::standard(g), base)?);
    }
    Ok(IdentitySuite {
        coarse_nx: base,
        fine_nx: 2 * base,
        rows,
    })
}
