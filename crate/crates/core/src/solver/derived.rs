use super::{SolutionField, SolverError};
use crate::geometry::GeometryState;
use crate::nonlinearity::NonlinearitySpec;
use crate::scalar::{lit, wide, Real};

/// Auxiliary fields built from a solution, indexed `[time][node]`.
#[derive(Clone, Debug)]
pub struct DerivedHarnackFields<T> {
    pub d: T,
    pub lambda: T,
    pub beta: T,
    /// `log u`
    pub h_log: Vec<Vec<T>>,
    /// `log(u / D)`
    pub h_ratio: Vec<Vec<T>>,
    /// `|∇h|² / (1 − h)²` with `h = log(u/D)`
    pub w: Vec<Vec<T>>,
    /// `u^β`
    pub h_beta: Vec<Vec<T>>,
    /// `t [|∇log u|² − λ ∂ₜ log u + λ Σ / u]`
    pub g: Vec<Vec<T>>,
    /// `γ(t) |∇u|² / u − u log(D/u)` with `γ(t) = t / (1 + 2𝗄t)`
    pub f_gamma: Vec<Vec<T>>,
}

pub fn gamma_of_t<T: Real>(t: T, super_k: T) -> T {
    t / (T::one() + lit::<T>(2.0) * super_k * t)
}

pub fn derived_fields<T: Real>(
    sol: &SolutionField<T>,
    geom: &GeometryState<T>,
    sigma: &NonlinearitySpec,
    d: T,
    lambda: T,
    beta: T,
    super_k: T,
) -> Result<DerivedHarnackFields<T>, SolverError> {
    let sup = sol.sup();
    if d < sup {
        return Err(SolverError::BoundViolated {
            d: wide(d),
            sup: wide(sup),
        });
    }
    let nt = sol.u.len();
    let nx = sol.u[0].len();
    let mut out = DerivedHarnackFields {
        d,
        lambda,
        beta,
        h_log: Vec::with_capacity(nt),
        h_ratio: Vec::with_capacity(nt),
        w: Vec::with_capacity(nt),
        h_beta: Vec::with_capacity(nt),
        g: Vec::with_capacity(nt),
        f_gamma: Vec::with_capacity(nt),
    };
    for k in 0..nt {
        let t = sol.times[k];
        let gam = gamma_of_t(t, super_k);
        let mut hl = Vec::with_capacity(nx);
        let mut hr = Vec::with_capacity(nx);
        let mut w = Vec::with_capacity(nx);
        let mut hb = Vec::with_capacity(nx);
        let mut g = Vec::with_capacity(nx);
        let mut fg = Vec::with_capacity(nx);
        for i in 0..nx {
            let u = sol.u[k][i];
            let du = sol.grad[k][i];
            let h = (u / d).ln();
            let gl = du / u;
            let s = if sigma.is_zero() {
                T::zero()
            } else {
                sigma.value(t, geom.coord(i), u)
            };
            hl.push(u.ln());
            hr.push(h);
            w.push(gl * gl / ((T::one() - h) * (T::one() - h)));
            hb.push(u.powf(beta));
            g.push(t * (gl * gl - lambda * sol.dt_u[k][i] / u + lambda * s / u));
            fg.push(gam * du * du / u - u * (d / u).ln());
        }
        out.h_log.push(hl);
        out.h_ratio.push(hr);
        out.w.push(w);
        out.h_beta.push(hb);
        out.g.push(g);
        out.f_gamma.push(fg);
    }
    Ok(out)
}
