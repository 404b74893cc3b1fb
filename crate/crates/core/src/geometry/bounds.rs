use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{BakryEmery, GeometryError, GeometryState};
use crate::scalar::{lit, pos_part, Real};

/// Space-time sample set: for each sampled time, the nodes it contains.
#[derive(Clone, Debug, PartialEq)]
pub struct Region<T> {
    pub slices: Vec<(T, Vec<usize>)>,
}

impl<T: Real> Region<T> {
    pub fn new(slices: Vec<(T, Vec<usize>)>) -> Self {
        Region { slices }
    }

    /// Every node at every mesh time.
    pub fn whole(geom: &GeometryState<T>) -> Self {
        let g = geom.grid();
        let all: Vec<usize> = (0..g.nx).collect();
        Region {
            slices: (0..=g.nt).map(|k| (geom.time(k), all.clone())).collect(),
        }
    }

    /// The cylinder `{d(x, x0, t) <= radius, t in mesh}`.
    pub fn ball(geom: &GeometryState<T>, x0: usize, radius: T) -> Self {
        let g = geom.grid();
        Region {
            slices: (0..=g.nt)
                .map(|k| {
                    let t = geom.time(k);
                    (t, geom.ball(x0, radius, t))
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.slices.iter().all(|(_, n)| n.is_empty())
    }

    /// Union of nodes over all slices.
    pub fn node_union(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.slices.iter().flat_map(|(_, n)| n.iter().copied()).collect();
        set.into_iter().collect()
    }
}

/// Which Ricci lower bound `k₁` is normalized against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `Ric_f >= -(n-1) k₁ g`.
    RicciF,
    /// `Ric_f^m >= -(m-1) k₁ g`.
    RicciFM,
}

/// Curvature and flow constants measured on a region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowBounds<T> {
    pub normalization: Normalization,
    pub k1: T,
    pub k2_lower: T,
    pub k2_upper: T,
    pub k3: T,
    pub ell1: T,
    pub ell2: T,
    pub k: T,
    pub super_flow_k: T,
}

impl<T: Real> FlowBounds<T> {
    pub fn zero(normalization: Normalization) -> Self {
        let z = T::zero();
        FlowBounds {
            normalization,
            k1: z,
            k2_lower: z,
            k2_upper: z,
            k3: z,
            ell1: z,
            ell2: z,
            k: z,
            super_flow_k: z,
        }
    }

    pub fn to_f64(&self) -> FlowBounds<f64> {
        let w = |v: T| v.to_f64().unwrap_or(f64::NAN);
        FlowBounds {
            normalization: self.normalization,
            k1: w(self.k1),
            k2_lower: w(self.k2_lower),
            k2_upper: w(self.k2_upper),
            k3: w(self.k3),
            ell1: w(self.ell1),
            ell2: w(self.ell2),
            k: w(self.k),
            super_flow_k: w(self.super_flow_k),
        }
    }

    /// `𝗄₊`.
    pub fn super_flow_k_pos(&self) -> T {
        pos_part(self.super_flow_k)
    }
}

impl<T: Real> GeometryState<T> {
    /// Measures the bounds on `region` using the geometry's own `m` for
    /// `Ric_f^m` and the super-flow constant.
    pub fn extract_flow_bounds(
        &self,
        region: &Region<T>,
        normalization: Normalization,
    ) -> Result<FlowBounds<T>, GeometryError> {
        self.extract_flow_bounds_with(region, normalization, self.bakry_emery())
    }

    pub fn extract_flow_bounds_with(
        &self,
        region: &Region<T>,
        normalization: Normalization,
        m: BakryEmery,
    ) -> Result<FlowBounds<T>, GeometryError> {
        if region.is_empty() {
            return Err(GeometryError::EmptyRegion);
        }
        // Static data: one time slice over the node union suffices.
        let collapsed;
        let slices: &[(T, Vec<usize>)] = if self.is_static() {
            collapsed = vec![(region.slices[0].0, region.node_union())];
            &collapsed
        } else {
            &region.slices
        };

        let mut neg_ric = T::neg_infinity();
        let mut neg_v = T::neg_infinity();
        let mut pos_v = T::neg_infinity();
        let mut k3 = T::zero();
        let mut ell1 = T::zero();
        let mut ell2 = T::zero();
        let mut flow = T::neg_infinity();
        for (t, nodes) in slices {
            let t = *t;
            for &i in nodes {
                let ric = match normalization {
                    Normalization::RicciF => self.ricci_f(i, t)?,
                    Normalization::RicciFM => self.ricci_f_m_with(i, t, m)?,
                };
                let ricm = self.ricci_f_m_with(i, t, m)?;
                let speed = self.metric_speed_tensor(i, t)?;
                neg_ric = neg_ric.max(-ric.min_eig());
                neg_v = neg_v.max(-speed.v.min_eig());
                pos_v = pos_v.max(speed.v.max_eig());
                k3 = k3.max(speed.grad_norm);
                let x = self.coord(i);
                ell1 = ell1.max(self.grad_f_at(x, t).abs());
                ell2 = ell2.max(self.grad_ft_at(x, t).abs());
                flow = flow.max(-(speed.v.add(&ricm)).min_eig());
            }
        }
        let sup_neg = pos_part(neg_ric);
        let denom = match normalization {
            Normalization::RicciF => self.dim() as f64 - 1.0,
            Normalization::RicciFM => match m {
                BakryEmery::Finite(mv) => mv - 1.0,
                BakryEmery::Infinite => {
                    return Err(GeometryError::NormalizationUndefined("m is infinite"))
                }
            },
        };
        let k1 = if sup_neg == T::zero() {
            T::zero()
        } else if denom <= 0.0 {
            return Err(GeometryError::NormalizationUndefined(
                "negative curvature with zero normalization",
            ));
        } else {
            sup_neg / lit(denom)
        };
        let k2_lower = pos_part(neg_v);
        Ok(FlowBounds {
            normalization,
            k1,
            k2_lower,
            k2_upper: pos_part(pos_v),
            k3,
            ell1,
            ell2,
            k: (k1 * k1 + k2_lower * k2_lower).sqrt(),
            super_flow_k: flow,
        })
    }
}
