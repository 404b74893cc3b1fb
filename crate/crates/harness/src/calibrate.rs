//! Implied-constant calibration over a battery of scenarios.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::{FamilyName, ScenarioConfig};
use crate::scenario::run_battery;
use crate::HarnessError;

/// Spread of `C_min` across the battery above which a formula is flagged.
pub const SPREAD_LIMIT: f64 = 10.0;

const BATTERY: [(&str, &str, &str, &str); 5] = [
    ("linear-heat", "0", "1 + 0.5*cos(x)", "entry = \"zero\""),
    ("u-log-u", "0", "1 + 0.5*cos(x)", "entry = \"log\""),
    ("yamabe-small", "0", "0.2 + 0.1*cos(x)", "entry = \"yamabe\"\nexp_p = 3.0"),
    ("positive-q", "0.5", "1 + 0.5*cos(x)", "entry = \"zero\""),
    ("negative-q", "-0.5", "1 + 0.5*cos(x)", "entry = \"zero\""),
];

/// Five scenarios on the flat 2-torus of side `2π` sharing one grid:
/// linear heat, `u log u`, small-data `u³`, and constant `q = ±1/2`.
pub fn default_battery(nx: usize, nt: usize) -> Vec<ScenarioConfig> {
    BATTERY
        .iter()
        .map(|(name, q, u0, nl)| {
            let text = format!(
                "name = \"{name}\"\n\
                 [geometry]\nfamily = \"conformal-torus\"\nn = 2\nm = 2.0\n\
                 [grid]\nnx = {nx}\nnt = {nt}\nt_end = 1.0\n\
                 [equation]\nq = \"{q}\"\ninitial = \"{u0}\"\n\
                 [equation.nonlinearity]\n{nl}\n\
                 [estimates]\nselect = [\"souplet-zhang\", \"hamilton\"]\n"
            );
            ScenarioConfig::from_toml(&text).expect("built-in battery scenario")
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub scenario: String,
    pub estimate: String,
    pub c_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spread {
    pub estimate: String,
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationTable {
    pub rows: Vec<CalibrationRow>,
    pub spreads: Vec<Spread>,
}

impl CalibrationTable {
    pub fn flagged(&self) -> bool {
        self.spreads.iter().any(|s| s.flagged)
    }

    pub fn c_min(&self, scenario: &str, estimate: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scenario == scenario && r.estimate == estimate)
            .map(|r| r.c_min)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,estimate,c_min\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.scenario, r.estimate, r.c_min));
        }
        out
    }
}

fn dimension(cfg: &ScenarioConfig) -> usize {
    match cfg.geometry.family {
        FamilyName::ConformalTorus => cfg.geometry.n.unwrap_or(0),
        FamilyName::Warped => 2,
    }
}

/// `C_min` of every implied-constant report of every scenario, and its
/// spread per estimate.
pub fn calibration_study(battery: &[ScenarioConfig], jobs: usize) -> Result<CalibrationTable, HarnessError> {
    let Some(first) = battery.first() else {
        return Err(HarnessError::Config("calibration battery is empty".into()));
    };
    let n = dimension(first);
    if battery.iter().any(|c| dimension(c) != n) {
        return Err(HarnessError::Config("battery scenarios must share the dimension n".into()));
    }
    let mut rows = Vec::new();
    for run in run_battery(battery, jobs) {
        let run = run?;
        for r in &run.reports {
            if let Some(c) = r.implied_constant {
                rows.push(CalibrationRow {
                    scenario: run.config.name.clone(),
                    estimate: r.estimate.clone(),
                    c_min: c,
                });
            }
        }
    }
    let mut by_estimate: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        by_estimate.entry(&r.estimate).or_default().push(r.c_min);
    }
    let spreads = by_estimate
        .into_iter()
        .map(|(estimate, v)| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
            Spread {
                estimate: estimate.to_string(),
                min,
                max,
                ratio,
                flagged: !(ratio <= SPREAD_LIMIT),
            }
        })
        .collect();
    Ok(CalibrationTable { rows, spreads })
}
