//! Model smooth metric measure spaces `(M, g(t), e^{-f} dv)`.
//!
//! Two families are supported, both reducible to one spatial coordinate:
//!
//! * conformally flat tori `σ(t)² δ` of dimension 1 or 2, with data depending
//!   on the first coordinate only;
//! * rotationally symmetric surfaces `dr² + w(r,t)² dθ²` with radial data.
//!
//! Everything is expressed in the orthonormal frame `(e_r, e_θ)` (or
//! `(e_x, e_y)`), in which every tensor that appears here is diagonal. The
//! first frame component of a gradient is the only nonzero one.

pub mod bounds;
pub mod comparison;
pub mod tensor;

use std::marker::PhantomData;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Env, Expr, Var};
use crate::scalar::{lit, Real};

pub use bounds::{FlowBounds, Normalization, Region};
pub use comparison::ComparisonCheck;
pub use tensor::{FrameTensor, SymTensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate metric at node {node}, t = {t}")]
    DegenerateMetric { node: usize, t: f64 },
    #[error("pole regularization did not converge for {quantity} at node {node}, t = {t}")]
    PoleRegularization {
        quantity: &'static str,
        node: usize,
        t: f64,
    },
    #[error("m = n requires a constant potential")]
    ConventionViolation,
    #[error("invalid geometry: {0}")]
    Invalid(String),
    #[error("empty region")]
    EmptyRegion,
    #[error("curvature normalization undefined: {0}")]
    NormalizationUndefined(&'static str),
    #[error("distance-1 sphere leaves the domain")]
    SphereOutsideDomain,
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

/// Bakry-Émery dimension parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BakryEmery {
    Finite(f64),
    Infinite,
}

impl BakryEmery {
    pub fn finite(&self) -> Option<f64> {
        match self {
            BakryEmery::Finite(m) => Some(*m),
            BakryEmery::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpTopology {
    /// Closed surface with poles at both ends (sphere-like).
    TwoPole,
    /// Pole at `r_min = 0`, Neumann outer edge.
    Disc,
    /// No poles, Neumann at both ends.
    Annulus,
    /// `r` is periodic (torus of revolution).
    Periodic,
}

#[derive(Clone, Debug)]
pub enum Family {
    ConformalTorus {
        n: usize,
        sigma: Expr,
        length: f64,
    },
    Warped {
        warp: Expr,
        topology: WarpTopology,
        r_min: f64,
        r_max: f64,
    },
}

/// Uniform space-time mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub t_end: f64,
    pub x_min: f64,
    pub dx: f64,
    pub periodic: bool,
    pub left_pole: bool,
    pub right_pole: bool,
}

impl Grid {
    pub fn dt(&self) -> f64 {
        self.t_end / self.nt as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t_end * n as f64 / self.nt as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.x_min + self.dx * i as f64
    }

    pub fn is_pole(&self, i: usize) -> bool {
        (self.left_pole && i == 0) || (self.right_pole && i + 1 == self.nx)
    }

    /// Chart extent (period for periodic grids).
    pub fn span(&self) -> f64 {
        if self.periodic {
            self.dx * self.nx as f64
        } else {
            self.dx * (self.nx - 1) as f64
        }
    }

    /// Left and right neighbours with wrap-around or mirror reflection.
    #[inline]
    pub fn neighbors(&self, i: usize) -> (usize, usize) {
        let n = self.nx;
        if self.periodic {
            ((i + n - 1) % n, (i + 1) % n)
        } else if i == 0 {
            (1, 1)
        } else if i + 1 == n {
            (n - 2, n - 2)
        } else {
            (i - 1, i + 1)
        }
    }

    /// Nodes whose centred stencils stay away from the boundary.
    pub fn is_interior(&self, i: usize) -> bool {
        self.periodic || (i > 0 && i + 1 < self.nx)
    }
}

/// One row of the discrete Witten Laplacian acting on `(left, self, right)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LapRow<T> {
    pub lo: T,
    pub di: T,
    pub up: T,
}

/// Output of [`GeometryState::metric_speed_tensor`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSpeed<T> {
    /// `v = ∂ₜg / 2` in the frame.
    pub v: FrameTensor<T>,
    pub trace: T,
    /// Radial frame component of `div v`.
    pub div: T,
    /// Radial frame component of `∇ Tr v`.
    pub grad_trace: T,
    /// `|∇v|`.
    pub grad_norm: T,
}

#[derive(Clone, Debug)]
struct Derivs {
    a: Expr,
    a_t: Expr,
    a_x: Expr,
    a_xx: Expr,
    a_tx: Expr,
    f: Expr,
    f_x: Expr,
    f_xx: Expr,
    f_t: Expr,
    f_tx: Expr,
}

/// Immutable model geometry with potential, mesh and dimension parameter.
#[derive(Clone, Debug)]
pub struct GeometryState<T> {
    family: Family,
    grid: Grid,
    n: usize,
    m: BakryEmery,
    d: Derivs,
    static_metric: bool,
    static_potential: bool,
    _scalar: PhantomData<T>,
}

const POLE_STEP: f64 = 1e-3;

impl<T: Real> GeometryState<T> {
    pub fn new(
        family: Family,
        potential: Expr,
        nx: usize,
        nt: usize,
        t_end: f64,
        m: BakryEmery,
    ) -> Result<Self, GeometryError> {
        if nx < 5 || nt < 1 {
            return Err(GeometryError::Invalid("grid needs nx >= 5 and nt >= 1".into()));
        }
        if !(t_end > 0.0) {
            return Err(GeometryError::Invalid("final time must be positive".into()));
        }
        if potential.depends_on(Var::U) {
            return Err(GeometryError::Invalid("potential may not depend on u".into()));
        }
        let (n, grid, a) = match &family {
            Family::ConformalTorus { n, sigma, length } => {
                if *n != 1 && *n != 2 {
                    return Err(GeometryError::Invalid("torus dimension must be 1 or 2".into()));
                }
                if !(*length > 0.0) {
                    return Err(GeometryError::Invalid("torus length must be positive".into()));
                }
                if sigma.depends_on(Var::X) || sigma.depends_on(Var::U) {
                    return Err(GeometryError::Invalid(
                        "conformal factor may depend on t only".into(),
                    ));
                }
                let grid = Grid {
                    nx,
                    nt,
                    t_end,
                    x_min: 0.0,
                    dx: length / nx as f64,
                    periodic: true,
                    left_pole: false,
                    right_pole: false,
                };
                (*n, grid, sigma.clone())
            }
            Family::Warped {
                warp,
                topology,
                r_min,
                r_max,
            } => {
                if !(r_max > r_min) {
                    return Err(GeometryError::Invalid("need r_max > r_min".into()));
                }
                if warp.depends_on(Var::U) {
                    return Err(GeometryError::Invalid("warp may not depend on u".into()));
                }
                let poles = matches!(topology, WarpTopology::TwoPole | WarpTopology::Disc);
                if poles && *r_min != 0.0 {
                    return Err(GeometryError::Invalid("poles require r_min = 0".into()));
                }
                let periodic = *topology == WarpTopology::Periodic;
                let dx = if periodic {
                    (r_max - r_min) / nx as f64
                } else {
                    (r_max - r_min) / (nx - 1) as f64
                };
                let grid = Grid {
                    nx,
                    nt,
                    t_end,
                    x_min: *r_min,
                    dx,
                    periodic,
                    left_pole: poles,
                    right_pole: *topology == WarpTopology::TwoPole,
                };
                (2, grid, warp.clone())
            }
        };
        if let BakryEmery::Finite(mv) = m {
            if !(mv >= n as f64) {
                return Err(GeometryError::Invalid(format!("need m >= n = {n}")));
            }
            if mv == n as f64 && potential.depends_on(Var::X) {
                return Err(GeometryError::ConventionViolation);
            }
        }
        let a_x = a.diff(Var::X);
        let f_x = potential.diff(Var::X);
        let d = Derivs {
            a_t: a.diff(Var::T),
            a_xx: a_x.diff(Var::X),
            a_tx: a_x.diff(Var::T),
            a_x,
            f_xx: f_x.diff(Var::X),
            f_t: potential.diff(Var::T),
            f_tx: f_x.diff(Var::T),
            f_x,
            f: potential,
            a,
        };
        let geom = GeometryState {
            static_metric: !d.a.depends_on(Var::T),
            static_potential: !d.f.depends_on(Var::T),
            family,
            grid,
            n,
            m,
            d,
            _scalar: PhantomData,
        };
        geom.validate()?;
        Ok(geom)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let g = &self.grid;
        let ev = |e: &Expr, x: f64, t: f64| e.at(t, x, 0.0);
        for k in 0..=g.nt {
            let t = g.time(k);
            match &self.family {
                Family::ConformalTorus { .. } => {
                    let s = ev(&self.d.a, 0.0, t);
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(GeometryError::DegenerateMetric { node: 0, t });
                    }
                }
                Family::Warped { .. } => {
                    for i in 0..g.nx {
                        let r = g.coord(i);
                        let w = ev(&self.d.a, r, t);
                        if g.is_pole(i) {
                            let slope = ev(&self.d.a_x, r, t);
                            let want = if i == 0 { 1.0 } else { -1.0 };
                            if w.abs() > 1e-9 || (slope - want).abs() > 1e-6 {
                                return Err(GeometryError::Invalid(format!(
                                    "warp does not close smoothly at the pole r = {r}"
                                )));
                            }
                        } else if !(w > 0.0) || !w.is_finite() {
                            return Err(GeometryError::DegenerateMetric { node: i, t });
                        }
                    }
                }
            }
        }
        if g.periodic {
            let a = g.x_min;
            let b = g.x_min + g.span();
            let mut exprs = vec![&self.d.f, &self.d.f_x];
            if let Family::Warped { .. } = self.family {
                exprs.push(&self.d.a);
            }
            for e in exprs {
                let (fa, fb) = (ev(e, a, 0.0), ev(e, b, 0.0));
                if (fa - fb).abs() > 1e-8 * (1.0 + fa.abs()) {
                    return Err(GeometryError::Invalid(
                        "periodic chart requires periodic data".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bakry_emery(&self) -> BakryEmery {
        self.m
    }

    pub fn potential(&self) -> &Expr {
        &self.d.f
    }

    pub fn potential_is_constant(&self) -> bool {
        !self.d.f.depends_on(Var::X)
    }

    pub fn is_static(&self) -> bool {
        self.static_metric && self.static_potential
    }

    pub fn has_static_metric(&self) -> bool {
        self.static_metric
    }

    /// Compact without boundary (torus, two-pole surface, periodic band).
    pub fn is_closed(&self) -> bool {
        match &self.family {
            Family::ConformalTorus { .. } => true,
            Family::Warped { topology, .. } => {
                matches!(topology, WarpTopology::TwoPole | WarpTopology::Periodic)
            }
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> T {
        lit(self.grid.coord(i))
    }

    #[inline]
    pub fn time(&self, k: usize) -> T {
        lit(self.grid.time(k))
    }

    #[inline]
    fn env(&self, x: T, t: T) -> Env<T> {
        Env {
            t,
            x,
            u: T::zero(),
        }
    }

    /// Ratio between chart and frame derivatives (σ on tori, 1 on surfaces).
    #[inline]
    pub fn scale(&self, t: T) -> T {
        match self.family {
            Family::ConformalTorus { .. } => self.d.a.eval(&self.env(T::zero(), t)),
            Family::Warped { .. } => T::one(),
        }
    }

    /// Radial frame component of `∇f` at chart coordinate `x`.
    #[inline]
    pub fn grad_f_at(&self, x: T, t: T) -> T {
        self.d.f_x.eval(&self.env(x, t)) / self.scale(t)
    }

    /// Radial frame component of `∇∂ₜf` at chart coordinate `x`.
    pub fn grad_ft_at(&self, x: T, t: T) -> T {
        self.d.f_tx.eval(&self.env(x, t)) / self.scale(t)
    }

    pub fn f_at(&self, x: T, t: T) -> T {
        self.d.f.eval(&self.env(x, t))
    }

    pub fn ft_at(&self, x: T, t: T) -> T {
        self.d.f_t.eval(&self.env(x, t))
    }

    /// `w_r / w` at an interior point of a warped surface, zero on tori.
    #[inline]
    pub fn kappa_at(&self, x: T, t: T) -> T {
        match self.family {
            Family::ConformalTorus { .. } => T::zero(),
            Family::Warped { .. } => {
                let e = self.env(x, t);
                self.d.a_x.eval(&e) / self.d.a.eval(&e)
            }
        }
    }

    /// Limit at a pole node of a radial quantity, by Richardson extrapolation
    /// of values sampled just inside the pole.
    fn pole_limit(
        &self,
        i: usize,
        t: T,
        quantity: &'static str,
        g: impl Fn(T) -> T,
    ) -> Result<T, GeometryError> {
        let r0 = self.grid.coord(i);
        let s = if i == 0 { 1.0 } else { -1.0 };
        let h = POLE_STEP * self.grid.span().min(1.0);
        let g1 = g(lit(r0 + s * h));
        let g2 = g(lit(r0 + s * 0.5 * h));
        let lim = (lit::<T>(4.0) * g2 - g1) / lit(3.0);
        let tol = lit::<T>(1e-3) * (T::one() + g2.abs());
        if !lim.is_finite() || (g2 - g1).abs() > tol {
            return Err(GeometryError::PoleRegularization {
                quantity,
                node: i,
                t: t.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(lim)
    }

    /// Chart components of `g(t)` at node `i`.
    pub fn metric_at(&self, i: usize, t: T) -> Result<SymTensor<T>, GeometryError> {
        let bad = || GeometryError::DegenerateMetric {
            node: i,
            t: t.to_f64().unwrap_or(f64::NAN),
        };
        match self.family {
            Family::ConformalTorus { n, .. } => {
                let s = self.scale(t);
                if !(s > T::zero()) {
                    return Err(bad());
                }
                Ok(SymTensor::diag(n, s * s, s * s))
            }
            Family::Warped { .. } => {
                let w = self.d.a.eval(&self.env(self.coord(i), t));
                if !(w > T::zero()) {
                    return Err(bad());
                }
                Ok(SymTensor::diag(2, T::one(), w * w))
            }
        }
    }

    /// `Ric + Hess f` at node `i`, as frame eigenvalues (radial, angular).
    pub fn ricci_f(&self, i: usize, t: T) -> Result<FrameTensor<T>, GeometryError> {
        let x = self.coord(i);
        match self.family {
            Family::ConformalTorus { n, .. } => {
                let s = self.scale(t);
                let f_xx = self.d.f_xx.eval(&self.env(x, t));
                Ok(FrameTensor::new(n, f_xx / (s * s), T::zero()))
            }
            Family::Warped { .. } => {
                let gauss = |r: T| {
                    let e = self.env(r, t);
                    -self.d.a_xx.eval(&e) / self.d.a.eval(&e)
                };
                let f_rr = self.d.f_xx.eval(&self.env(x, t));
                if self.grid.is_pole(i) {
                    let k = self.pole_limit(i, t, "Gauss curvature", gauss)?;
                    let ang = self.pole_limit(i, t, "angular Ricci", |r| {
                        gauss(r) + self.kappa_at(r, t) * self.d.f_x.eval(&self.env(r, t))
                    })?;
                    Ok(FrameTensor::new(2, k + f_rr, ang))
                } else {
                    let k = gauss(x);
                    let f_r = self.d.f_x.eval(&self.env(x, t));
                    Ok(FrameTensor::new(2, k + f_rr, k + self.kappa_at(x, t) * f_r))
                }
            }
        }
    }

    /// `Ric + Hess f − ∇f⊗∇f/(m−n)`; delegates to [`Self::ricci_f`] for
    /// `m = ∞`.
    pub fn ricci_f_m(&self, i: usize, t: T) -> Result<FrameTensor<T>, GeometryError> {
        self.ricci_f_m_with(i, t, self.m)
    }

    /// As [`Self::ricci_f_m`] with an explicit dimension parameter.
    pub fn ricci_f_m_with(
        &self,
        i: usize,
        t: T,
        m: BakryEmery,
    ) -> Result<FrameTensor<T>, GeometryError> {
        let rf = self.ricci_f(i, t)?;
        let m = match m {
            BakryEmery::Infinite => return Ok(rf),
            BakryEmery::Finite(m) => m,
        };
        let gap = m - self.n as f64;
        if gap <= 0.0 {
            if self.potential_is_constant() {
                return Ok(rf);
            }
            return Err(GeometryError::ConventionViolation);
        }
        let f1 = self.grad_f_at(self.coord(i), t);
        let mut out = rf;
        out.diag[0] = out.diag[0] - f1 * f1 / lit(gap);
        Ok(out)
    }

    /// `v = ∂ₜg/2` with trace, divergence and covariant derivative norm.
    pub fn metric_speed_tensor(&self, i: usize, t: T) -> Result<MetricSpeed<T>, GeometryError> {
        match self.family {
            Family::ConformalTorus { n, .. } => {
                let e = self.env(T::zero(), t);
                let s = self.d.a_t.eval(&e) / self.d.a.eval(&e);
                Ok(MetricSpeed {
                    v: FrameTensor::new(n, s, s),
                    trace: s * lit(n as f64),
                    div: T::zero(),
                    grad_trace: T::zero(),
                    grad_norm: T::zero(),
                })
            }
            Family::Warped { .. } => {
                if self.static_metric {
                    return Ok(MetricSpeed {
                        v: FrameTensor::zero(2),
                        trace: T::zero(),
                        div: T::zero(),
                        grad_trace: T::zero(),
                        grad_norm: T::zero(),
                    });
                }
                // Frame components: v = diag(0, β) with β = w_t / w.
                let beta = |r: T| {
                    let e = self.env(r, t);
                    self.d.a_t.eval(&e) / self.d.a.eval(&e)
                };
                let beta_r = |r: T| {
                    let e = self.env(r, t);
                    let w = self.d.a.eval(&e);
                    (self.d.a_tx.eval(&e) * w - self.d.a_t.eval(&e) * self.d.a_x.eval(&e)) / (w * w)
                };
                let kb = |r: T| self.kappa_at(r, t) * beta(r);
                let x = self.coord(i);
                let (b, br, kbv) = if self.grid.is_pole(i) {
                    (
                        self.pole_limit(i, t, "metric speed", beta)?,
                        self.pole_limit(i, t, "metric speed gradient", beta_r)?,
                        self.pole_limit(i, t, "metric speed connection term", kb)?,
                    )
                } else {
                    (beta(x), beta_r(x), kb(x))
                };
                let two = lit::<T>(2.0);
                Ok(MetricSpeed {
                    v: FrameTensor::new(2, T::zero(), b),
                    trace: b,
                    div: -kbv,
                    grad_trace: br,
                    grad_norm: (br * br + two * kbv * kbv).sqrt(),
                })
            }
        }
    }

    /// Coefficients of the discrete Witten Laplacian at time `t`.
    pub fn laplacian_rows(&self, t: T) -> Vec<LapRow<T>> {
        (0..self.grid.nx).map(|i| self.lap_row(i, t)).collect()
    }

    /// Row `i` of the discrete Witten Laplacian at time `t`.
    pub fn lap_row(&self, i: usize, t: T) -> LapRow<T> {
        let g = &self.grid;
        let dx = lit::<T>(g.dx);
        let inv2 = T::one() / (dx * dx);
        if g.is_pole(i) {
            // Δu = 2 u_rr at a smooth pole.
            let two = lit::<T>(2.0) * inv2;
            return LapRow {
                lo: two,
                di: -two - two,
                up: two,
            };
        }
        let half = T::one() / (lit::<T>(2.0) * dx);
        let s = self.scale(t);
        let a = T::one() / (s * s);
        let x = self.coord(i);
        let drift = match self.family {
            Family::ConformalTorus { .. } => -a * self.d.f_x.eval(&self.env(x, t)),
            Family::Warped { .. } => self.kappa_at(x, t) - self.d.f_x.eval(&self.env(x, t)),
        };
        LapRow {
            lo: a * inv2 - drift * half,
            di: -(a * inv2 + a * inv2),
            up: a * inv2 + drift * half,
        }
    }

    /// `Δ_f` at node `i` of the field whose value at node `j` is `value(j)`.
    #[inline]
    pub fn witten_laplacian_at(&self, i: usize, t: T, value: impl Fn(usize) -> T) -> T {
        let row = self.lap_row(i, t);
        let (l, r) = self.grid.neighbors(i);
        row.lo * value(l) + row.di * value(i) + row.up * value(r)
    }

    /// Applies precomputed rows to `u`.
    pub fn apply_rows(&self, rows: &[LapRow<T>], u: &[T]) -> Vec<T> {
        (0..self.grid.nx)
            .map(|i| {
                let (l, r) = self.grid.neighbors(i);
                rows[i].lo * u[l] + rows[i].di * u[i] + rows[i].up * u[r]
            })
            .collect()
    }

    /// `Δ_f u = Δu − <∇f, ∇u>` by second-order central differences.
    pub fn witten_laplacian_apply(&self, u: &[T], t: T) -> Vec<T> {
        assert_eq!(u.len(), self.grid.nx, "field must cover the spatial grid");
        let rows = self.laplacian_rows(t);
        self.apply_rows(&rows, u)
    }

    /// Radial frame component of `∇u` at node `i`.
    #[inline]
    pub fn grad_at(&self, u: &[T], i: usize, t: T) -> T {
        let (l, r) = self.grid.neighbors(i);
        (u[r] - u[l]) / (lit::<T>(2.0 * self.grid.dx) * self.scale(t))
    }

    pub fn gradient(&self, u: &[T], t: T) -> Vec<T> {
        (0..self.grid.nx).map(|i| self.grad_at(u, i, t)).collect()
    }

    /// Frame Hessian of a radial field at node `i`.
    pub fn hessian_at(&self, u: &[T], i: usize, t: T) -> FrameTensor<T> {
        let (l, r) = self.grid.neighbors(i);
        let dx = lit::<T>(self.grid.dx);
        let second = (u[r] - u[i] - u[i] + u[l]) / (dx * dx);
        match self.family {
            Family::ConformalTorus { n, .. } => {
                let s = self.scale(t);
                FrameTensor::new(n, second / (s * s), T::zero())
            }
            Family::Warped { .. } => {
                let ang = if self.grid.is_pole(i) {
                    second
                } else {
                    self.kappa_at(self.coord(i), t) * self.grad_at(u, i, t)
                };
                FrameTensor::new(2, second, ang)
            }
        }
    }

    /// Distance between chart coordinates at time `t`.
    pub fn distance_coords(&self, x1: T, x2: T, t: T) -> T {
        let mut d = (x1 - x2).abs();
        if self.grid.periodic {
            let l = lit::<T>(self.grid.span());
            d = d % l;
            d = d.min(l - d);
        }
        d * self.scale(t)
    }

    pub fn geodesic_distance(&self, i1: usize, i2: usize, t: T) -> T {
        if i1 == i2 {
            return T::zero();
        }
        self.distance_coords(self.coord(i1), self.coord(i2), t)
    }

    /// Nodes within distance `radius` of node `x0` at time `t`.
    pub fn ball(&self, x0: usize, radius: T, t: T) -> Vec<usize> {
        (0..self.grid.nx)
            .filter(|&i| self.geodesic_distance(x0, i, t) <= radius)
            .collect()
    }

    /// Whether a ball of the given radius about `x0` stays inside the chart
    /// (and inside the injectivity radius on tori) for all mesh times.
    pub fn ball_fits(&self, x0: usize, radius: f64) -> bool {
        let g = &self.grid;
        let r0 = g.coord(x0);
        match &self.family {
            Family::ConformalTorus { length, .. } => (0..=g.nt).all(|k| {
                let s = self.d.a.at(g.time(k), 0.0, 0.0);
                radius < 0.5 * length * s
            }),
            Family::Warped {
                topology,
                r_min,
                r_max,
                ..
            } => match topology {
                WarpTopology::Periodic => radius < 0.5 * (r_max - r_min),
                WarpTopology::TwoPole => radius <= r_max - r_min,
                WarpTopology::Disc => radius <= r_max - r0,
                WarpTopology::Annulus => radius <= (r_max - r0).min(r0 - r_min),
            },
        }
    }
}
