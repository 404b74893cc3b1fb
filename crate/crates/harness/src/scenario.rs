//! Solving a scenario and running its selected checks.

use harnack_core::estimates::{
    build_cutoffs, discretization_tolerance, elliptic_harnack_check, f_gamma_check, hamilton_check,
    hamilton_global_check, harnack_interpolation_check, li_yau_check, liouville_check,
    liouville_predicates, parabolic_harnack_check, souplet_zhang_check, CheckOptions, EstimateError,
    EstimateReport, Problem, Status,
};
use harnack_core::nonlinearity::NonlinearitySpec;
use harnack_core::solver::{solve_elliptic, solve_parabolic, SolutionField};
use harnack_core::{Expr, Geometry};
use rayon::prelude::*;

use crate::config::{EstimateKind, Mode, ScenarioConfig};
use crate::HarnessError;

/// A solved scenario with its reports.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub geometry: Geometry,
    /// `None` when the solve was skipped because the hypotheses fail on
    /// the initial data.
    pub solution: Option<SolutionField<f64>>,
    pub reports: Vec<EstimateReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Pass,
    HypothesesUnmetOnly,
    Violation,
}

impl RunStatus {
    pub fn of_reports(reports: &[EstimateReport]) -> RunStatus {
        if reports.iter().any(|r| r.status == Status::Violation) {
            RunStatus::Violation
        } else if reports.iter().any(|r| r.status == Status::HypothesesUnmet) {
            RunStatus::HypothesesUnmetOnly
        } else {
            RunStatus::Pass
        }
    }
}

impl ScenarioRun {
    pub fn status(&self) -> RunStatus {
        RunStatus::of_reports(&self.reports)
    }
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    hash: &'a str,
}

impl Ctx<'_> {
    fn wrap(&self, stage: &str, e: impl std::fmt::Display) -> HarnessError {
        HarnessError::Scenario {
            scenario: self.cfg.name.clone(),
            hash: self.hash[..12].to_string(),
            stage: stage.to_string(),
            message: e.to_string(),
        }
    }

    fn estimate(&self, e: EstimateError) -> HarnessError {
        match e {
            EstimateError::RadiusTooLarge { .. } => HarnessError::RadiusTooLarge(format!("{}: {e}", self.cfg.name)),
            other => self.wrap("estimate", other),
        }
    }
}

/// Runs one scenario. Deterministic: the output depends only on the
/// configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, HarnessError> {
    cfg.validate()?;
    let hash = cfg.hash();
    let ctx = Ctx { cfg, hash: &hash };
    let geom = cfg.build_geometry()?;
    let q = cfg.build_q()?;
    let sigma = cfg.build_sigma()?;
    let u0 = cfg.initial_values(&geom)?;
    let scope = cfg.estimates.scope()?;
    let largest = if cfg
        .estimates
        .select
        .iter()
        .any(|k| matches!(k, EstimateKind::LiYau | EstimateKind::ParabolicHarnack))
    {
        2.0
    } else {
        1.0
    };
    scope.ensure_fits(&geom, largest).map_err(|e| ctx.estimate(e))?;

    let opts = CheckOptions {
        tolerance: discretization_tolerance(&geom, cfg.tolerance.c_tol),
        rhs_scale: cfg.tolerance.rhs_scale,
        theta_samples: cfg.tolerance.theta_samples,
        theta_max_slices: cfg.tolerance.theta_max_slices,
        seed: cfg.seed,
        pairs: cfg.estimates.pairs,
        harnack_rel_tol: cfg.tolerance.harnack_rel_tol,
        path_mesh: cfg.estimates.path_mesh(),
        constant: cfg.estimates.constant,
    };

    let (solution, mut reports) = match cfg.equation.mode {
        Mode::Elliptic => elliptic(&ctx, &geom, &q, &sigma, &u0, &opts)?,
        Mode::Parabolic => {
            let sol = solve_parabolic(&geom, &q, &sigma, &u0, &cfg.solver).map_err(|e| ctx.wrap("solve", e))?;
            let reports = parabolic(&ctx, &geom, &q, &sigma, &sol, scope, &opts)?;
            (Some(sol), reports)
        }
    };
    for r in &mut reports {
        r.config_hash = Some(hash.clone());
    }
    Ok(ScenarioRun {
        config: cfg.clone(),
        config_hash: hash,
        geometry: geom,
        solution,
        reports,
    })
}

type Outcome = (Option<SolutionField<f64>>, Vec<EstimateReport>);

fn elliptic(
    ctx: &Ctx,
    geom: &Geometry,
    q: &Expr,
    sigma: &NonlinearitySpec,
    u0: &[f64],
    opts: &CheckOptions,
) -> Result<Outcome, HarnessError> {
    let est = &ctx.cfg.estimates;
    if !est.select.contains(&EstimateKind::Liouville) {
        let sol = solve_elliptic(geom, sigma, u0, &ctx.cfg.solver).map_err(|e| ctx.wrap("solve", e))?;
        return Ok((Some(sol), Vec::new()));
    }
    // The reaction predicates are decided on the range of the initial data
    // first: a reaction that breaks them may have no stationary state.
    let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range: Vec<f64> = (0..=64).map(|j| lo + (hi - lo) * j as f64 / 64.0).collect();
    let why = liouville_predicates(geom, sigma, est.liouville_mode, est.lambda, &range)
        .map_err(|e| ctx.estimate(e))?;
    if !why.is_empty() {
        let name = match est.liouville_mode {
            harnack_core::estimates::LiouvilleMode::GradientBound => "liouville-gradient-bound",
            harnack_core::estimates::LiouvilleMode::DifferentialHarnack => "liouville-differential-harnack",
        };
        let mut r = EstimateReport::hypotheses_unmet(name, "global", opts.tolerance, why);
        r.notes.push("stationary solve skipped".into());
        return Ok((None, vec![r]));
    }
    let sol = solve_elliptic(geom, sigma, u0, &ctx.cfg.solver).map_err(|e| ctx.wrap("solve", e))?;
    let p = Problem {
        geom,
        q,
        sigma,
        sol: &sol,
    };
    let r = liouville_check(&p, est.liouville_mode, est.lambda, est.epsilon, est.oscillation_tol, opts)
        .map_err(|e| ctx.estimate(e))?;
    Ok((Some(sol), vec![r]))
}

fn parabolic(
    ctx: &Ctx,
    geom: &Geometry,
    q: &Expr,
    sigma: &NonlinearitySpec,
    sol: &SolutionField<f64>,
    scope: harnack_core::estimates::Scope,
    opts: &CheckOptions,
) -> Result<Vec<EstimateReport>, HarnessError> {
    let est = &ctx.cfg.estimates;
    let p = Problem { geom, q, sigma, sol };
    let cut = build_cutoffs();
    let e = |r: Result<EstimateReport, EstimateError>| r.map_err(|e| ctx.estimate(e));
    let mut select = est.select.clone();
    select.sort();
    select.dedup();
    let mut reports = Vec::new();
    for kind in select {
        match kind {
            EstimateKind::SoupletZhang => reports.push(e(souplet_zhang_check(&p, scope, est.d, opts))?),
            EstimateKind::Hamilton => reports.push(e(hamilton_check(&p, scope, opts))?),
            EstimateKind::EllipticHarnack => {
                let c = match est.elliptic_constant {
                    Some(c) => c,
                    None => {
                        let sz = e(souplet_zhang_check(&p, scope, est.d, &CheckOptions { constant: None, ..*opts }))?;
                        sz.implied_constant.unwrap_or(f64::INFINITY)
                    }
                };
                if !c.is_finite() || c <= 0.0 {
                    return Err(ctx.wrap("estimate", "elliptic Harnack constant is not a positive number"));
                }
                reports.push(e(elliptic_harnack_check(&p, scope, c, est.d, est.elliptic_slices, opts))?);
            }
            EstimateKind::LiYau => {
                for lambda in est.lambda_sweep() {
                    reports.push(e(li_yau_check(&p, scope, lambda, &est.epsilons, &cut, opts))?);
                }
            }
            EstimateKind::ParabolicHarnack => {
                reports.push(e(parabolic_harnack_check(&p, scope, est.lambda, &est.epsilons, &cut, opts))?)
            }
            EstimateKind::HamiltonGlobal => reports.push(e(hamilton_global_check(&p, est.d, opts))?),
            EstimateKind::HarnackInterpolation => {
                let o = CheckOptions {
                    pairs: est.interpolation_pairs,
                    ..*opts
                };
                reports.push(e(harnack_interpolation_check(&p, est.d, &est.interpolation_s, &o))?)
            }
            EstimateKind::FGamma => reports.push(e(f_gamma_check(&p, est.d, opts))?),
            EstimateKind::Liouville => unreachable!("rejected by validation"),
        }
    }
    Ok(reports)
}

/// Runs scenarios on a pool of `jobs` threads; results keep the input
/// order.
pub fn run_battery(configs: &[ScenarioConfig], jobs: usize) -> Vec<Result<ScenarioRun, HarnessError>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| configs.par_iter().map(run_scenario).collect())
}
