//! Harnack-type quantities: the elliptic exponent and the path energy `L`.

use serde::{Deserialize, Serialize};

use super::EstimateError;
use crate::geometry::GeometryState;
use crate::scalar::{lit, wide, Real};

/// `γ = exp(−C d · bracket)`.
pub fn harnack_elliptic_gamma(d: f64, bracket: f64, c: f64) -> f64 {
    if d == 0.0 {
        return 1.0;
    }
    (-c * d * bracket).exp()
}

/// `1/R + √([γ_Δf]₊/R) + 1/√t + √k + sup` with the `R` terms dropped when
/// `radius` is `None`.
pub fn elliptic_bracket(radius: Option<f64>, gamma_delta_f: f64, t: f64, k: f64, sup_terms: f64) -> f64 {
    let mut b = 1.0 / t.sqrt() + k.sqrt() + sup_terms;
    if let Some(r) = radius {
        b += 1.0 / r + (gamma_delta_f.max(0.0) / r).sqrt();
    }
    b
}

/// Resolution of the discrete path space: every `stride`-th admissible node
/// (plus both endpoints) and `slices` equal time steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathMesh {
    pub stride: usize,
    pub slices: usize,
}

impl PathMesh {
    pub fn refined(&self) -> Self {
        PathMesh {
            stride: (self.stride / 2).max(1),
            slices: self.slices * 2,
        }
    }
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

fn metric_weight<T: Real>(geom: &GeometryState<T>, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL5.iter()
        .map(|&(x, w)| {
            let s = wide(geom.scale(lit(mid + half * x)));
            w * s * s
        })
        .sum::<f64>()
        * half
}

/// `L = inf ¼ ∫_{t1}^{t2} |γ'(t)|²_{g(t)} dt` over piecewise-linear paths
/// through the discrete path space, with every vertex in `admissible`.
pub fn path_energy_l<T: Real>(
    geom: &GeometryState<T>,
    x1: usize,
    x2: usize,
    t1: f64,
    t2: f64,
    admissible: &[usize],
    mesh: PathMesh,
) -> Result<f64, EstimateError> {
    if !(t2 > t1) {
        return Err(EstimateError::Parameter("path energy needs t2 > t1"));
    }
    if !admissible.contains(&x1) || !admissible.contains(&x2) {
        return Err(EstimateError::NoPath);
    }
    let mut pos: Vec<usize> = admissible
        .iter()
        .copied()
        .step_by(mesh.stride.max(1))
        .collect();
    pos.push(x1);
    pos.push(x2);
    pos.sort_unstable();
    pos.dedup();
    let coords: Vec<f64> = pos.iter().map(|&i| geom.grid().coord(i)).collect();
    let flat = |a: usize, b: usize| {
        let d = geom.distance_coords(lit(coords[a]), lit(coords[b]), T::zero());
        wide(d / geom.scale(T::zero()))
    };
    let p = pos.len();
    let mut d2 = vec![0.0; p * p];
    for a in 0..p {
        for b in 0..p {
            let d = flat(a, b);
            d2[a * p + b] = d * d;
        }
    }
    let start = pos.binary_search(&x1).unwrap();
    let end = pos.binary_search(&x2).unwrap();
    let j = mesh.slices.max(1);
    let dt = (t2 - t1) / j as f64;
    let at = |s: usize| t1 + dt * s as f64;
    // Prefix integrals of σ² so that a segment may span several slices; this
    // keeps coarse path spaces inside refined ones.
    let mut weight = vec![0.0; j + 1];
    for s in 0..j {
        weight[s + 1] = weight[s] + metric_weight(geom, at(s), at(s + 1));
    }
    let mut cost = vec![vec![f64::INFINITY; p]; j + 1];
    cost[0][start] = 0.0;
    for s2 in 1..=j {
        for s1 in 0..s2 {
            let span = dt * (s2 - s1) as f64;
            let w = (weight[s2] - weight[s1]) / (4.0 * span * span);
            let (head, tail) = cost.split_at_mut(s2);
            let from_row = &head[s1];
            for (to, slot) in tail[0].iter_mut().enumerate() {
                for (from, &c) in from_row.iter().enumerate() {
                    if c.is_finite() {
                        *slot = slot.min(c + w * d2[from * p + to]);
                    }
                }
            }
        }
    }
    let cost = &cost[j];
    let l = cost[end];
    if l.is_finite() {
        Ok(l)
    } else {
        Err(EstimateError::NoPath)
    }
}
