//! Report, CSV and manifest files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use harnack_core::estimates::{EstimateReport, ProbePoint};
use serde::{Deserialize, Serialize};

use crate::config::Mode;
use crate::scenario::{RunStatus, ScenarioRun};
use crate::HarnessError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct SolverSummary {
    pub substeps: usize,
    pub halvings: usize,
    pub max_residual: f64,
    pub residual_tol: f64,
    pub stationary: bool,
}

/// Contents of `<scenario>.report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport<'a> {
    pub scenario: &'a str,
    pub config_hash: &'a str,
    pub tool_version: &'static str,
    pub mode: Mode,
    pub status: RunStatus,
    pub solver: Option<SolverSummary>,
    pub reports: &'a [EstimateReport],
}

impl<'a> RunReport<'a> {
    pub fn new(run: &'a ScenarioRun) -> Self {
        RunReport {
            scenario: &run.config.name,
            config_hash: &run.config_hash,
            tool_version: TOOL_VERSION,
            mode: run.config.equation.mode,
            status: run.status(),
            solver: run.solution.as_ref().map(|s| SolverSummary {
                substeps: s.substeps,
                halvings: s.halvings,
                max_residual: s.max_residual,
                residual_tol: s.residual_tol,
                stationary: s.stationary,
            }),
            reports: &run.reports,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub scenario: String,
    pub config_hash: String,
    pub status: String,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub status: String,
    pub scenarios: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, HarnessError> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }
}

fn status_label(s: RunStatus) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn io(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// `t,node,x,u` rows on evenly spaced snapshot times.
pub fn solution_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("t,node,x,u\n");
    let Some(sol) = &run.solution else {
        return out;
    };
    let levels = sol.times.len();
    let want = run.config.output.snapshots.max(2).min(levels);
    let mut picks: Vec<usize> = (0..want)
        .map(|j| if want == 1 { 0 } else { j * (levels - 1) / (want - 1) })
        .collect();
    picks.dedup();
    for k in picks {
        for (i, u) in sol.u[k].iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", sol.times[k], i, run.geometry.coord(i), u);
        }
    }
    out
}

/// The `margin_rows` smallest margins of every report.
pub fn margins_csv(run: &ScenarioRun) -> String {
    let mut out = String::from("estimate,scope,t,node,x,lhs,rhs,margin\n");
    for r in &run.reports {
        let mut pts: Vec<&ProbePoint> = r.points.iter().collect();
        pts.sort_by(|a, b| {
            a.margin
                .total_cmp(&b.margin)
                .then(a.t.total_cmp(&b.t))
                .then(a.node.cmp(&b.node))
        });
        for p in pts.into_iter().take(run.config.output.margin_rows) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.estimate, r.scope, p.t, p.node, p.x, p.lhs, p.rhs, p.margin
            );
        }
    }
    out
}

/// Writes report, margins and (optionally) solution files for each run and
/// a manifest listing them. Returns the overall status.
pub fn write_runs(dir: &Path, runs: &[ScenarioRun], with_solution: bool) -> Result<RunStatus, HarnessError> {
    let mut names: Vec<&str> = runs.iter().map(|r| r.config.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(HarnessError::Config(format!("scenario name '{}' is used twice", w[0])));
    }
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut entries = Vec::new();
    let mut overall = RunStatus::Pass;
    for run in runs {
        let stem = &run.config.name;
        let mut files = vec![format!("{stem}.report.json"), format!("{stem}.margins.csv")];
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| io(&path, e))
        };
        write(&files[0], RunReport::new(run).to_json())?;
        write(&files[1], margins_csv(run))?;
        if with_solution {
            files.push(format!("{stem}.solution.csv"));
            write(&files[2], solution_csv(run))?;
        }
        overall = overall.max(run.status());
        entries.push(ManifestEntry {
            scenario: stem.clone(),
            config_hash: run.config_hash.clone(),
            status: status_label(run.status()),
            files,
        });
    }
    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        status: status_label(overall),
        scenarios: entries,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(|e| io(&path, e))?;
    Ok(overall)
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    fs::write(path, serde_json::to_string_pretty(value).expect("value serializes")).map_err(|e| io(path, e))
}
