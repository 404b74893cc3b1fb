//! Scenario runner and verification studies built on `harnack-core`.

pub mod calibrate;
pub mod config;
pub mod fuzz;
pub mod identities;
pub mod output;
pub mod scenario;

use thiserror::Error;

pub use calibrate::{calibration_study, default_battery, CalibrationTable};
pub use config::ScenarioConfig;
pub use fuzz::{fuzz_algebraic_lemma, FuzzOutcome};
pub use identities::{identity_residual_suite, IdentityGeometry, IdentitySuite};
pub use scenario::{run_battery, run_scenario, RunStatus, ScenarioRun};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    RadiusTooLarge(String),
    #[error("scenario {scenario} [{hash}] failed during {stage}: {message}")]
    Scenario {
        scenario: String,
        hash: String,
        stage: String,
        message: String,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Bad input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_) | HarnessError::RadiusTooLarge(_))
    }
}
