//! Gradient-estimate formulas and the checks that evaluate them on a
//! discrete solution.

pub mod checks;
pub mod cutoffs;
pub mod harnack;
pub mod lemma;
pub mod quantities;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GeometryState};
use crate::nonlinearity::NonlinearityError;
use crate::scalar::Real;

pub use checks::*;
pub use cutoffs::{build_cutoffs, CutoffConstants};
pub use harnack::{harnack_elliptic_gamma, path_energy_l, PathMesh};
pub use quantities::{
    hamilton_quantities, harnack_s, li_yau_quantities, li_yau_rhs, souplet_zhang_quantities,
    LiYauParams, LiYauQuantities, ThetaSampler,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("u = {u} outside (0, D] with D = {d}")]
    OutOfRange { u: f64, d: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("probe set is empty")]
    EmptyProbeSet,
    #[error("R too large for grid: the ball of radius {radius} about node {x0} (R times the check factor) leaves the domain")]
    RadiusTooLarge { x0: usize, radius: f64 },
    #[error("no admissible path between the given points")]
    NoPath,
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

/// Whether an estimate is taken on a ball about `x0` or on the whole space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scope {
    Global,
    Local { x0: usize, radius: f64 },
}

impl Scope {
    pub fn radius(&self) -> Option<f64> {
        match self {
            Scope::Global => None,
            Scope::Local { radius, .. } => Some(*radius),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scope::Global => "global",
            Scope::Local { .. } => "local",
        }
    }

    /// Fails with [`EstimateError::RadiusTooLarge`] unless the ball of
    /// `factor · R` fits the grid.
    pub fn ensure_fits<T: Real>(&self, geom: &GeometryState<T>, factor: f64) -> Result<(), EstimateError> {
        if let Scope::Local { x0, radius } = *self {
            if !(radius > 0.0) {
                return Err(EstimateError::Parameter("radius must be positive"));
            }
            if x0 >= geom.grid().nx || !geom.ball_fits(x0, factor * radius) {
                return Err(EstimateError::RadiusTooLarge {
                    x0,
                    radius: factor * radius,
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Violation,
    HypothesesUnmet,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MarginStats {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl MarginStats {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return MarginStats::default();
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        MarginStats {
            min: v[0],
            median,
            max: v[n - 1],
        }
    }
}

/// One probed point; `margin = rhs − lhs` unless stated otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbePoint {
    pub t: f64,
    pub node: usize,
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: String,
    pub scope: String,
    pub status: Status,
    pub probes: usize,
    pub violations: usize,
    pub tolerance: f64,
    pub margins: MarginStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_constant: Option<f64>,
    pub quantities: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(skip)]
    pub points: Vec<ProbePoint>,
}

impl EstimateReport {
    pub fn new(estimate: &str, scope: &str, tolerance: f64) -> Self {
        EstimateReport {
            estimate: estimate.to_string(),
            scope: scope.to_string(),
            status: Status::Pass,
            probes: 0,
            violations: 0,
            tolerance,
            margins: MarginStats::default(),
            implied_constant: None,
            quantities: BTreeMap::new(),
            notes: Vec::new(),
            config_hash: None,
            points: Vec::new(),
        }
    }

    pub fn hypotheses_unmet(estimate: &str, scope: &str, tolerance: f64, why: Vec<String>) -> Self {
        let mut r = Self::new(estimate, scope, tolerance);
        r.status = Status::HypothesesUnmet;
        r.notes = why;
        r
    }

    pub fn quantity(&mut self, name: &str, v: f64) {
        self.quantities.insert(name.to_string(), v);
    }

    /// Fills probes, margin statistics, violation count and status from
    /// `points`; a margin below `−tolerance` is a violation.
    pub fn finish(&mut self) {
        let margins: Vec<f64> = self.points.iter().map(|p| p.margin).collect();
        self.finish_with(&margins);
    }

    pub fn finish_with(&mut self, margins: &[f64]) {
        self.probes = margins.len();
        self.margins = MarginStats::from_values(margins);
        self.violations = margins
            .iter()
            .filter(|&&m| !(m >= -self.tolerance))
            .count();
        if self.status != Status::HypothesesUnmet {
            self.status = if self.violations > 0 {
                Status::Violation
            } else {
                Status::Pass
            };
        }
    }
}

/// `τ = C_tol (Δx² + Δt)`.
pub fn discretization_tolerance<T: Real>(geom: &GeometryState<T>, c_tol: f64) -> f64 {
    let g = geom.grid();
    c_tol * (g.dx * g.dx + g.dt())
}
