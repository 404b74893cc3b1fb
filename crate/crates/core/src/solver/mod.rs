//! IMEX solver for `∂ₜu − q u − Δ_f u = Σ(t, x, u)`.
//!
//! Each step treats diffusion implicitly (one tridiagonal solve, geometry
//! coefficients frozen at the half step) and `q u + Σ` explicitly. Steps
//! are subdivided when the positivity guard trips or when the step-doubling
//! error estimate exceeds `τ_res Δt / 2`, where
//! `τ_res = C_tol (Δx² + Δt) sup|u|`.

pub mod derived;
pub mod tridiag;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Env, Expr};
use crate::geometry::{GeometryError, GeometryState, LapRow, Region};
use crate::nonlinearity::NonlinearitySpec;
use crate::scalar::{lit, wide, Real};

pub use derived::{derived_fields, DerivedHarnackFields};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("blow-down: positivity lost after {halvings} step halvings at t = {t}")]
    BlowDown { t: f64, halvings: u32 },
    #[error("step-size control failed after {halvings} halvings at t = {t}")]
    StepControl { t: f64, halvings: u32 },
    #[error("PDE residual {max} exceeds tolerance {tol}")]
    Residual { max: f64, tol: f64 },
    #[error("elliptic relaxation did not converge in {steps} steps (rate {rate})")]
    NonConvergence { steps: usize, rate: f64 },
    #[error("elliptic solve needs a static metric and potential")]
    NotStatic,
    #[error("initial data: {0}")]
    InitialData(String),
    #[error("D = {d} is below sup u = {sup}")]
    BoundViolated { d: f64, sup: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub c_tol: f64,
    pub max_halvings: u32,
    pub check_residual: bool,
    pub elliptic_tol: f64,
    pub elliptic_max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            c_tol: 10.0,
            max_halvings: 20,
            check_residual: true,
            elliptic_tol: 1e-10,
            elliptic_max_steps: 200_000,
        }
    }
}

/// Space-time cylinder addressed by mesh indices: `(time index, nodes)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cylinder {
    pub slices: Vec<(usize, Vec<usize>)>,
}

impl Cylinder {
    pub fn whole<T: Real>(geom: &GeometryState<T>, times: usize) -> Self {
        let all: Vec<usize> = (0..geom.grid().nx).collect();
        Cylinder {
            slices: (0..times).map(|k| (k, all.clone())).collect(),
        }
    }

    /// `{(x, t_k) : d(x, x0, t_k) <= radius}` for `k < times`.
    pub fn ball<T: Real>(geom: &GeometryState<T>, x0: usize, radius: T, times: usize) -> Self {
        Cylinder {
            slices: (0..times)
                .map(|k| (k, geom.ball(x0, radius, geom.time(k))))
                .collect(),
        }
    }

    /// Drops the initial slice.
    pub fn positive_times(&self) -> Self {
        Cylinder {
            slices: self.slices.iter().filter(|(k, _)| *k > 0).cloned().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.slices.iter().all(|(_, n)| n.is_empty())
    }

    pub fn len(&self) -> usize {
        self.slices.iter().map(|(_, n)| n.len()).sum()
    }

    pub fn points(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.slices
            .iter()
            .flat_map(|(k, nodes)| nodes.iter().map(move |&i| (*k, i)))
    }

    pub fn to_region<T: Real>(&self, times: &[T]) -> Region<T> {
        Region::new(
            self.slices
                .iter()
                .map(|(k, n)| (times[*k], n.clone()))
                .collect(),
        )
    }
}

/// Discrete positive solution with cached derivatives.
#[derive(Clone, Debug)]
pub struct SolutionField<T> {
    pub times: Vec<T>,
    pub u: Vec<Vec<T>>,
    /// Radial frame component of `∇u`.
    pub grad: Vec<Vec<T>>,
    pub dt_u: Vec<Vec<T>>,
    pub lap_f_u: Vec<Vec<T>>,
    pub max_residual: T,
    pub residual_tol: T,
    pub substeps: usize,
    pub halvings: usize,
    pub stationary: bool,
}

impl<T: Real> SolutionField<T> {
    pub fn grad_norm(&self, k: usize, i: usize) -> T {
        self.grad[k][i].abs()
    }

    pub fn sup_over(&self, cyl: &Cylinder) -> T {
        cyl.points()
            .map(|(k, i)| self.u[k][i])
            .fold(T::neg_infinity(), T::max)
    }

    pub fn inf_over(&self, cyl: &Cylinder) -> T {
        cyl.points()
            .map(|(k, i)| self.u[k][i])
            .fold(T::infinity(), T::min)
    }

    pub fn sup(&self) -> T {
        self.u
            .iter()
            .flatten()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    pub fn inf(&self) -> T {
        self.u.iter().flatten().copied().fold(T::infinity(), T::min)
    }

    /// Oscillation `sup u − inf u` of the last time slice.
    pub fn final_oscillation(&self) -> T {
        let last = self.u.last().expect("solution has at least one slice");
        let hi = last.iter().copied().fold(T::neg_infinity(), T::max);
        let lo = last.iter().copied().fold(T::infinity(), T::min);
        hi - lo
    }

    /// Default `D = (1 + 10⁻⁶) sup u`.
    pub fn default_d(&self) -> T {
        self.sup() * lit(1.0 + 1e-6)
    }
}

struct Stepper<'a, T> {
    geom: &'a GeometryState<T>,
    q: &'a Expr,
    sigma: &'a NonlinearitySpec,
    xs: Vec<T>,
    q_zero: bool,
    static_rows: Option<Vec<LapRow<T>>>,
}

impl<'a, T: Real> Stepper<'a, T> {
    fn new(geom: &'a GeometryState<T>, q: &'a Expr, sigma: &'a NonlinearitySpec) -> Self {
        let nx = geom.grid().nx;
        Stepper {
            geom,
            q,
            sigma,
            xs: (0..nx).map(|i| geom.coord(i)).collect(),
            q_zero: q.is_zero(),
            static_rows: if geom.is_static() {
                Some(geom.laplacian_rows(T::zero()))
            } else {
                None
            },
        }
    }

    fn rows(&self, t: T) -> Vec<LapRow<T>> {
        match &self.static_rows {
            Some(r) => r.clone(),
            None => self.geom.laplacian_rows(t),
        }
    }

    /// `q u + Σ` at every node.
    fn reaction(&self, t: T, u: &[T]) -> Vec<T> {
        u.iter()
            .zip(&self.xs)
            .map(|(&ui, &x)| {
                let mut r = if self.sigma.is_zero() {
                    T::zero()
                } else {
                    self.sigma.value(t, x, ui)
                };
                if !self.q_zero {
                    r = r + self.q.eval(&Env { t, x, u: ui }) * ui;
                }
                r
            })
            .collect()
    }

    /// One IMEX Euler step of size `k` from `(t, u)`.
    fn step(&self, t: T, u: &[T], k: T) -> Vec<T> {
        let half = lit::<T>(0.5);
        let rows = self.rows(t + half * k);
        let react = self.reaction(t, u);
        let n = u.len();
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            a.push(-k * rows[i].lo);
            b.push(T::one() - k * rows[i].di);
            c.push(-k * rows[i].up);
            d.push(u[i] + k * react[i]);
        }
        tridiag::solve(&a, &b, &c, &d, self.geom.grid().periodic)
    }

    /// `Δ_f u + q u + Σ` at time `t`.
    fn rhs(&self, t: T, u: &[T]) -> Vec<T> {
        let rows = self.rows(t);
        let lap = self.geom.apply_rows(&rows, u);
        let react = self.reaction(t, u);
        lap.iter().zip(&react).map(|(&l, &r)| l + r).collect()
    }
}

fn sup_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

fn all_positive<T: Real>(v: &[T]) -> bool {
    v.iter().all(|&x| x > T::zero() && x.is_finite())
}

fn check_initial<T: Real>(geom: &GeometryState<T>, u0: &[T]) -> Result<(), SolverError> {
    if u0.len() != geom.grid().nx {
        return Err(SolverError::InitialData(format!(
            "expected {} values, got {}",
            geom.grid().nx,
            u0.len()
        )));
    }
    if !all_positive(u0) {
        return Err(SolverError::InitialData("initial data must be positive".into()));
    }
    Ok(())
}

/// Samples an initial-data expression in `x` on the spatial grid.
pub fn sample_initial<T: Real>(geom: &GeometryState<T>, u0: &Expr) -> Vec<T> {
    (0..geom.grid().nx)
        .map(|i| u0.eval(&Env {
            t: T::zero(),
            x: geom.coord(i),
            u: T::zero(),
        }))
        .collect()
}

/// Solves the parabolic problem on the geometry's mesh up to its final time.
pub fn solve_parabolic<T: Real>(
    geom: &GeometryState<T>,
    q: &Expr,
    sigma: &NonlinearitySpec,
    u0: &[T],
    opts: &SolverOptions,
) -> Result<SolutionField<T>, SolverError> {
    check_initial(geom, u0)?;
    let grid = *geom.grid();
    let stepper = Stepper::new(geom, q, sigma);
    let dt = lit::<T>(grid.dt());
    let dx = lit::<T>(grid.dx);
    let c_tol = lit::<T>(opts.c_tol);
    let min_step = dt / lit(2f64.powi(opts.max_halvings as i32));
    let half = lit::<T>(0.5);

    let mut u = vec![u0.to_vec()];
    let mut k = dt;
    let mut substeps = 0usize;
    let mut halvings = 0usize;
    let mut run_scale = sup_abs(u0);
    for n in 0..grid.nt {
        let t_next = geom.time(n + 1);
        let mut t = geom.time(n);
        let mut cur = u[n].clone();
        let snap = dt * lit(1e-9);
        while t_next - t > snap {
            let remaining = t_next - t;
            let last = k >= remaining;
            let step = if last { remaining } else { k };
            let full = stepper.step(t, &cur, step);
            let mid = stepper.step(t, &cur, half * step);
            let fine = stepper.step(t + half * step, &mid, half * step);
            let tau = c_tol * (dx * dx + dt) * sup_abs(&cur);
            let err = full
                .iter()
                .zip(&fine)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            let positive = all_positive(&mid) && all_positive(&fine);
            let noise = lit::<T>(64.0) * T::epsilon() * sup_abs(&cur);
            if !positive || !(err <= half * step * tau + noise) {
                k = half * step;
                halvings += 1;
                if k < min_step {
                    let t = wide(t);
                    return Err(if positive {
                        SolverError::StepControl {
                            t,
                            halvings: opts.max_halvings,
                        }
                    } else {
                        SolverError::BlowDown {
                            t,
                            halvings: opts.max_halvings,
                        }
                    });
                }
                continue;
            }
            cur = fine;
            t = if last { t_next } else { t + step };
            substeps += 1;
            if err <= lit::<T>(0.125) * half * step * tau {
                k = (step + step).min(dt);
            }
        }
        run_scale = run_scale.max(sup_abs(&cur));
        u.push(cur);
    }

    let times: Vec<T> = (0..=grid.nt).map(|k| geom.time(k)).collect();
    let residual_tol = c_tol * (dx * dx + dt) * run_scale;
    let mut max_residual = T::zero();
    let mut prev_rhs = stepper.rhs(times[0], &u[0]);
    let mut lap_f_u = Vec::with_capacity(u.len());
    lap_f_u.push(geom.apply_rows(&stepper.rows(times[0]), &u[0]));
    for n in 0..grid.nt {
        let rhs = stepper.rhs(times[n + 1], &u[n + 1]);
        for i in 0..grid.nx {
            if !grid.is_interior(i) {
                continue;
            }
            let r = (u[n + 1][i] - u[n][i]) / dt - half * (prev_rhs[i] + rhs[i]);
            max_residual = max_residual.max(r.abs());
        }
        lap_f_u.push(geom.apply_rows(&stepper.rows(times[n + 1]), &u[n + 1]));
        prev_rhs = rhs;
    }
    if opts.check_residual && !(max_residual <= residual_tol) {
        return Err(SolverError::Residual {
            max: wide(max_residual),
            tol: wide(residual_tol),
        });
    }

    let grad = u
        .iter()
        .zip(&times)
        .map(|(row, &t)| geom.gradient(row, t))
        .collect();
    let dt_u = time_derivative(&u, dt);
    Ok(SolutionField {
        times,
        u,
        grad,
        dt_u,
        lap_f_u,
        max_residual,
        residual_tol,
        substeps,
        halvings,
        stationary: false,
    })
}

/// Second-order time derivative of a sequence of slices (one-sided at the
/// ends).
pub fn time_derivative<T: Real>(u: &[Vec<T>], dt: T) -> Vec<Vec<T>> {
    let nt = u.len();
    let nx = u[0].len();
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let four = lit::<T>(4.0);
    (0..nt)
        .map(|k| {
            (0..nx)
                .map(|i| {
                    if nt < 3 {
                        if nt == 1 {
                            return T::zero();
                        }
                        return (u[1][i] - u[0][i]) / dt;
                    }
                    if k == 0 {
                        (-three * u[0][i] + four * u[1][i] - u[2][i]) / (two * dt)
                    } else if k + 1 == nt {
                        (three * u[k][i] - four * u[k - 1][i] + u[k - 2][i]) / (two * dt)
                    } else {
                        (u[k + 1][i] - u[k - 1][i]) / (two * dt)
                    }
                })
                .collect()
        })
        .collect()
}

/// Solves `Δ_f u + Σ(u) = 0` by implicit-explicit relaxation from `u0`
/// until `‖∂ₜu‖_∞ < elliptic_tol`.
pub fn solve_elliptic<T: Real>(
    geom: &GeometryState<T>,
    sigma: &NonlinearitySpec,
    u0: &[T],
    opts: &SolverOptions,
) -> Result<SolutionField<T>, SolverError> {
    check_initial(geom, u0)?;
    if !geom.is_static() {
        return Err(SolverError::NotStatic);
    }
    let zero_q = Expr::zero();
    let stepper = Stepper::new(geom, &zero_q, sigma);
    let grid = *geom.grid();
    let tol = lit::<T>(opts.elliptic_tol);
    let k_max = lit::<T>(1e3);
    let k_min = lit::<T>(grid.dx * grid.dx) / lit(2f64.powi(opts.max_halvings as i32));
    let mut k = lit::<T>(grid.dx * grid.dx);
    let mut u = u0.to_vec();
    let mut rate = T::infinity();
    let mut steps = 0;
    let mut halvings = 0;
    while steps < opts.elliptic_max_steps {
        if !sigma.is_zero() {
            let stiff = u
                .iter()
                .enumerate()
                .map(|(i, &ui)| sigma.d_u(T::zero(), geom.coord(i), ui).abs())
                .fold(T::zero(), T::max);
            if stiff > T::zero() {
                k = k.min(lit::<T>(0.5) / stiff);
            }
        }
        let next = stepper.step(T::zero(), &u, k);
        if !all_positive(&next) {
            k = k * lit(0.5);
            halvings += 1;
            if k < k_min {
                return Err(SolverError::BlowDown {
                    t: 0.0,
                    halvings: opts.max_halvings,
                });
            }
            continue;
        }
        let last_change: Vec<T> = next.iter().zip(&u).map(|(&a, &b)| (a - b) / k).collect();
        rate = sup_abs(&last_change);
        u = next;
        steps += 1;
        if rate < tol {
            let rows = geom.laplacian_rows(T::zero());
            let lap = geom.apply_rows(&rows, &u);
            let grad = geom.gradient(&u, T::zero());
            return Ok(SolutionField {
                times: vec![T::zero()],
                u: vec![u],
                grad: vec![grad],
                dt_u: vec![last_change],
                lap_f_u: vec![lap],
                max_residual: rate,
                residual_tol: tol,
                substeps: steps,
                halvings,
                stationary: true,
            });
        }
        k = (k * lit(1.5)).min(k_max);
    }
    Err(SolverError::NonConvergence {
        steps,
        rate: wide(rate),
    })
}
