use serde::Serialize;

use super::{Family, GeometryError, GeometryState};
use crate::scalar::{lit, Real};

/// Result of the weighted Laplacian comparison sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComparisonCheck {
    pub holds: bool,
    /// `min (bound − Δ_f ϱ)` over all samples.
    pub worst_margin: f64,
    pub samples: usize,
}

const DIRECTIONS: usize = 64;

impl<T: Real> GeometryState<T> {
    /// `Δ_f ϱ` on the sphere of radius `rho` about node `x0`, one value per
    /// sampled direction.
    pub fn distance_laplacian(&self, x0: usize, rho: T, t: T) -> Result<Vec<T>, GeometryError> {
        let g = self.grid();
        match self.family() {
            Family::ConformalTorus { n, length, .. } => {
                let s = self.scale(t);
                if rho / s >= lit(0.5 * length) {
                    return Err(GeometryError::SphereOutsideDomain);
                }
                let c0 = self.coord(x0);
                let dirs: Vec<T> = if *n == 1 {
                    vec![T::one(), -T::one()]
                } else {
                    (0..DIRECTIONS)
                        .map(|j| (lit::<T>(2.0 * std::f64::consts::PI * j as f64 / DIRECTIONS as f64)).cos())
                        .collect()
                };
                let flat = lit::<T>(*n as f64 - 1.0) / rho;
                Ok(dirs
                    .into_iter()
                    .map(|c| {
                        let x = c0 + rho * c / s;
                        flat - self.grad_f_at(x, t) * c
                    })
                    .collect())
            }
            Family::Warped { .. } => {
                if !g.is_pole(x0) {
                    return Err(GeometryError::Unsupported(
                        "distance spheres are only radial about a pole",
                    ));
                }
                let r0 = self.coord(x0);
                let (r, sign) = if x0 == 0 {
                    (r0 + rho, T::one())
                } else {
                    (r0 - rho, -T::one())
                };
                let lo = lit::<T>(g.x_min);
                let hi = lit::<T>(g.x_min + g.span());
                if r < lo || r > hi {
                    return Err(GeometryError::SphereOutsideDomain);
                }
                Ok(vec![sign * (self.kappa_at(r, t) - self.grad_f_at(r, t))])
            }
        }
    }

    fn sample_times(&self, t_end: T) -> Vec<T> {
        if self.is_static() {
            return vec![T::zero()];
        }
        let g = self.grid();
        (0..=g.nt)
            .map(|k| self.time(k))
            .filter(|&t| t <= t_end)
            .collect()
    }

    /// Maximum of `Δ_f ϱ` over the distance-1 sphere about `x0` for
    /// `t ∈ [0, t_end]`.
    pub fn gamma_delta_f(&self, x0: usize, t_end: T) -> Result<T, GeometryError> {
        let mut best = T::neg_infinity();
        for t in self.sample_times(t_end) {
            for v in self.distance_laplacian(x0, T::one(), t)? {
                best = best.max(v);
            }
        }
        Ok(best)
    }

    /// Checks `Δ_f ϱ <= (m−1)√k₁ coth(√k₁ ϱ)` (or `(m−1)/ϱ` when `k₁ = 0`)
    /// at every node with `ϱ ∈ [rho_min, rho_max]`.
    pub fn laplacian_comparison_check(
        &self,
        m: f64,
        k1: T,
        x0: usize,
        rho_min: T,
        rho_max: T,
        tol: T,
    ) -> Result<ComparisonCheck, GeometryError> {
        let mm1 = lit::<T>(m - 1.0);
        let sk = k1.max(T::zero()).sqrt();
        let mut worst = T::infinity();
        let mut samples = 0;
        for t in self.sample_times(lit(self.grid().t_end)) {
            for i in 0..self.grid().nx {
                let rho = self.geodesic_distance(x0, i, t);
                if rho < rho_min || rho > rho_max {
                    continue;
                }
                let bound = if sk > T::zero() {
                    mm1 * sk / (sk * rho).tanh()
                } else {
                    mm1 / rho
                };
                for v in self.distance_laplacian(x0, rho, t)? {
                    worst = worst.min(bound - v);
                    samples += 1;
                }
            }
        }
        let worst = worst.to_f64().unwrap_or(f64::NAN);
        Ok(ComparisonCheck {
            holds: samples > 0 && worst >= -tol.to_f64().unwrap_or(0.0),
            worst_margin: worst,
            samples,
        })
    }
}
