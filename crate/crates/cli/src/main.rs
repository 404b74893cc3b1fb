//! `harnack-lab`: solve scenarios, verify gradient estimates, run the
//! identity suite, fuzz the scalar lemma and calibrate implied constants.
//!
//! Exit codes: 0 pass, 1 violation or failure, 2 config error (including
//! an oversized radius), 3 only unmet hypotheses.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harnack_harness::output::{write_json, write_runs, Manifest};
use harnack_harness::{
    calibration_study, default_battery, fuzz_algebraic_lemma, identity_residual_suite, run_battery,
    HarnessError, IdentityGeometry, RunStatus, ScenarioConfig, ScenarioRun,
};

#[derive(Parser)]
#[command(name = "harnack-lab", version, about = "Numerical laboratory for gradient estimates of weighted heat equations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads for batteries of scenarios.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Overrides the seed of every scenario.
    #[arg(long, global = true, env = "HARNACK_LAB_SEED")]
    seed: Option<u64>,
    /// Multiplies the discretization tolerance constant.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve scenarios and write solution snapshots.
    Solve {
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve scenarios and evaluate their selected estimates.
    Verify {
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Residuals of the evolution identities on manufactured solutions.
    Identities {
        /// Geometry name, or `all`.
        #[arg(long, default_value = "all")]
        geometry: Vec<String>,
        /// Coarse resolution; the fine level doubles it.
        #[arg(long, default_value_t = 64)]
        base: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random search for counterexamples to the scalar lemma.
    Fuzz {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Implied constants across a battery of scenarios.
    Calibrate {
        /// Scenario files; the built-in battery when absent.
        #[arg(long)]
        config: Vec<PathBuf>,
        #[arg(long, default_value_t = 64)]
        nx: usize,
        #[arg(long, default_value_t = 100)]
        nt: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarise the reports of an output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(e: &HarnessError) -> ExitCode {
    eprintln!("harnack-lab: {e}");
    ExitCode::from(if e.is_config() { 2 } else { 1 })
}

fn status_code(s: RunStatus) -> ExitCode {
    ExitCode::from(match s {
        RunStatus::Pass => 0,
        RunStatus::Violation => 1,
        RunStatus::HypothesesUnmetOnly => 3,
    })
}

fn load(paths: &[PathBuf], g: &Global) -> Result<Vec<ScenarioConfig>, HarnessError> {
    paths
        .iter()
        .map(|p| {
            let mut c = ScenarioConfig::load(p)?;
            if let Some(seed) = g.seed {
                c.seed = seed;
            }
            if let Some(s) = g.tolerance_scale {
                if !(s > 0.0) {
                    return Err(HarnessError::Config("--tolerance-scale must be positive".into()));
                }
                c.tolerance.c_tol *= s;
            }
            Ok(c)
        })
        .collect()
}

fn run_all(configs: &[ScenarioConfig], jobs: usize) -> Result<Vec<ScenarioRun>, HarnessError> {
    run_battery(configs, jobs).into_iter().collect()
}

fn print_runs(runs: &[ScenarioRun]) {
    for run in runs {
        println!("{} [{}]", run.config.name, &run.config_hash[..12]);
        for r in &run.reports {
            let c = r.implied_constant.map(|c| format!(" C_min {c:.4}")).unwrap_or_default();
            println!(
                "  {:32} {:7} {:?}: {} probes, {} violations, min margin {:.4e}{c}",
                r.estimate, r.scope, r.status, r.probes, r.violations, r.margins.min
            );
            for n in &r.notes {
                println!("    {n}");
            }
        }
    }
}

fn verify(paths: &[PathBuf], out: &Path, g: &Global, solve_only: bool) -> Result<RunStatus, HarnessError> {
    let mut configs = load(paths, g)?;
    if solve_only {
        for c in &mut configs {
            c.estimates.select.clear();
        }
    } else if let Some(c) = configs.iter().find(|c| c.estimates.select.is_empty()) {
        return Err(HarnessError::Config(format!("{}: estimates.select is empty", c.name)));
    }
    let runs = run_all(&configs, g.jobs)?;
    print_runs(&runs);
    write_runs(out, &runs, true)
}

fn identities(names: &[String], base: usize, out: Option<&Path>) -> Result<bool, HarnessError> {
    let geometries: Vec<IdentityGeometry> = if names.iter().any(|n| n == "all") {
        IdentityGeometry::ALL.to_vec()
    } else {
        names.iter().map(|n| n.parse()).collect::<Result<_, _>>()?
    };
    let suite = identity_residual_suite(&geometries, base)?;
    println!("{:18} {:30} {:>12} {:>12} {:>7}", "geometry", "identity", "coarse", "fine", "order");
    for r in &suite.rows {
        let order = r.order.map(|o| format!("{o:.2}")).unwrap_or_else(|| "exact".into());
        println!(
            "{:18} {:30} {:>12.3e} {:>12.3e} {:>7} {}",
            r.geometry,
            r.identity,
            r.coarse,
            r.fine,
            order,
            if r.passed { "ok" } else { "FAILED" }
        );
    }
    if let Some(dir) = out {
        write_json(&dir.join("identities.json"), &suite)?;
    }
    Ok(suite.passed())
}

fn calibrate(paths: &[PathBuf], nx: usize, nt: usize, out: Option<&Path>, g: &Global) -> Result<bool, HarnessError> {
    let battery = if paths.is_empty() {
        default_battery(nx, nt)
    } else {
        load(paths, g)?
    };
    let table = calibration_study(&battery, g.jobs)?;
    for r in &table.rows {
        println!("{:20} {:16} {:.6}", r.scenario, r.estimate, r.c_min);
    }
    for s in &table.spreads {
        println!(
            "spread {:16} {:.3}x{}",
            s.estimate,
            s.ratio,
            if s.flagged { " FLAGGED" } else { "" }
        );
    }
    if let Some(dir) = out {
        write_json(&dir.join("calibration.json"), &table)?;
        std::fs::write(dir.join("calibration.csv"), table.to_csv())
            .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(!table.flagged())
}

fn report(dir: &Path) -> Result<RunStatus, HarnessError> {
    let manifest = Manifest::load(dir)?;
    println!("harnack-lab {} output in {}", manifest.tool_version, dir.display());
    for entry in &manifest.scenarios {
        println!("{} [{}] {}", entry.scenario, &entry.config_hash[..12.min(entry.config_hash.len())], entry.status);
        let Some(name) = entry.files.iter().find(|f| f.ends_with(".report.json")) else {
            continue;
        };
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        for r in json["reports"].as_array().into_iter().flatten() {
            println!(
                "  {:32} {:18} violations {}, min margin {}",
                r["estimate"].as_str().unwrap_or("?"),
                r["status"].as_str().unwrap_or("?"),
                r["violations"],
                r["margins"]["min"]
            );
        }
    }
    match manifest.status.as_str() {
        "pass" => Ok(RunStatus::Pass),
        "violation" => Ok(RunStatus::Violation),
        "hypotheses-unmet-only" => Ok(RunStatus::HypothesesUnmetOnly),
        other => Err(HarnessError::Config(format!("manifest status '{other}' is not recognised"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Solve { config, out } => verify(config, out, g, true).map(|_| ExitCode::SUCCESS),
        Command::Verify { config, out } => verify(config, out, g, false).map(status_code),
        Command::Identities { geometry, base, out } => {
            identities(geometry, *base, out.as_deref()).map(|ok| ExitCode::from(if ok { 0 } else { 1 }))
        }
        Command::Fuzz { samples, out } => {
            let res = fuzz_algebraic_lemma(*samples, g.seed.unwrap_or(0));
            println!(
                "{} samples ({} rejected), {} violations, worst gap {:.3e}",
                res.accepted, res.rejected, res.violations, res.worst_gap
            );
            let written = match out {
                Some(dir) => write_json(&dir.join("fuzz.json"), &res),
                None => Ok(()),
            };
            written.map(|_| ExitCode::from(if res.violations == 0 { 0 } else { 1 }))
        }
        Command::Calibrate { config, nx, nt, out } => {
            calibrate(config, *nx, *nt, out.as_deref(), g).map(|ok| ExitCode::from(if ok { 0 } else { 1 }))
        }
        Command::Report { out } => report(out).map(status_code),
    };
    outcome.unwrap_or_else(|e| fail(&e))
}
