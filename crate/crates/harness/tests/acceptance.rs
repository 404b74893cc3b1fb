//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use harnack_core::estimates::Status;
use harnack_core::{BakryEmery, Expr, Family, Geometry, WarpTopology};
use harnack_harness::output::{write_runs, RunReport};
use harnack_harness::{
    calibration_study, default_battery, fuzz_algebraic_lemma, identity_residual_suite, run_battery,
    run_scenario, IdentityGeometry, RunStatus, ScenarioConfig, ScenarioRun,
};

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"));
    ScenarioConfig::load(&path).unwrap()
}

/// Written to the stderr handle directly so the line survives output
/// capture.
fn verdict(n: usize, what: &str, ok: bool, detail: String) {
    let line = format!("criterion {n} {what}: {} ({detail})\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} {what}: {detail}");
}

fn fine_run() -> ScenarioRun {
    run_scenario(&scenario("golden-torus-fine")).unwrap()
}

#[test]
fn criterion_1_li_yau_sweep() {
    let start = Instant::now();
    let run = fine_run();
    let secs = start.elapsed().as_secs_f64();
    let ly: Vec<_> = run.reports.iter().filter(|r| r.estimate == "li-yau").collect();
    let lambdas: Vec<f64> = ly.iter().map(|r| r.quantities["lambda"]).collect();
    let ok = lambdas == [1.1, 1.5, 2.0, 4.0]
        && ly.iter().all(|r| r.status == Status::Pass && r.tolerance <= 0.05)
        && secs < 60.0;
    let worst = ly.iter().map(|r| r.margins.min).fold(f64::INFINITY, f64::min);
    verdict(
        1,
        "li-yau on the 256x2000 golden torus",
        ok,
        format!("lambdas {lambdas:?}, tau {:.4}, worst margin {worst:.4}, {secs:.1} s", ly[0].tolerance),
    );
}

#[test]
fn criterion_2_global_gradient_bound() {
    let run = fine_run();
    let hg = run.reports.iter().find(|r| r.estimate == "hamilton-global").unwrap();
    let hi = run.reports.iter().find(|r| r.estimate == "harnack-interpolation").unwrap();
    let ok = hg.status == Status::Pass
        && hg.tolerance <= 0.02
        && hi.status == Status::Pass
        && hi.probes == 100 * 3;
    verdict(
        2,
        "global gradient bound and interpolation",
        ok,
        format!(
            "tau {:.4}, worst margins {:.4} / {:.4}, {} interpolation probes",
            hg.tolerance, hg.margins.min, hi.margins.min, hi.probes
        ),
    );
}

#[test]
fn criterion_3_lemma_fuzz() {
    let out = fuzz_algebraic_lemma(100_000, 0xa1fa);
    verdict(
        3,
        "algebraic lemma fuzz",
        out.accepted == 100_000 && out.violations == 0,
        format!("{} accepted, {} rejected, worst gap {:.3e}", out.accepted, out.rejected, out.worst_gap),
    );
}

#[test]
fn criterion_4_identity_orders() {
    let start = Instant::now();
    let suite = identity_residual_suite(&IdentityGeometry::ALL, 64).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let min_order = suite
        .rows
        .iter()
        .filter_map(|r| r.order)
        .fold(f64::INFINITY, f64::min);
    let failed: Vec<String> = suite
        .rows
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}/{}", r.geometry, r.identity))
        .collect();
    verdict(
        4,
        "identity residual orders",
        suite.passed() && secs < 120.0,
        format!("{} rows, min order {min_order:.3}, failed {failed:?}, {secs:.1} s", suite.rows.len()),
    );
}

#[test]
fn criterion_5_parabolic_harnack() {
    let mut cfg = scenario("golden-torus");
    cfg.estimates.select = vec![harnack_harness::config::EstimateKind::ParabolicHarnack];
    let run = run_scenario(&cfg).unwrap();
    let r = &run.reports[0];
    verdict(
        5,
        "parabolic Harnack on random pairs",
        r.status == Status::Pass && r.probes == 50 && r.tolerance == 0.05,
        format!("{} pairs, worst relative margin {:.4}", r.probes, r.margins.min),
    );
}

#[test]
fn criterion_6_hyperbolic_comparison() {
    let g = Geometry::new(
        Family::Warped {
            warp: Expr::parse("sinh(r)").unwrap(),
            topology: WarpTopology::Disc,
            r_min: 0.0,
            r_max: 4.0,
        },
        Expr::zero(),
        161,
        10,
        1.0,
        BakryEmery::Finite(2.0),
    )
    .unwrap();
    let c = g.laplacian_comparison_check(2.0, 1.0, 0, 0.2, 2.0, 1e-3).unwrap();
    verdict(
        6,
        "Laplacian comparison on the hyperbolic plane",
        c.holds && c.worst_margin >= -1e-3,
        format!("{} samples, worst margin {:.3e}", c.samples, c.worst_margin),
    );
}

#[test]
fn criterion_7_implied_constant_stability() {
    let base = calibration_study(&default_battery(64, 100), 4).unwrap();
    let fine = calibration_study(&default_battery(128, 200), 4).unwrap();
    let finite = base.rows.iter().chain(&fine.rows).all(|r| r.c_min.is_finite() && r.c_min > 0.0);
    let worst_change = base
        .rows
        .iter()
        .map(|r| {
            let f = fine.c_min(&r.scenario, &r.estimate).unwrap();
            (f - r.c_min).abs() / r.c_min
        })
        .fold(0.0f64, f64::max);
    let worst_spread = base.spreads.iter().map(|s| s.ratio).fold(0.0f64, f64::max);
    verdict(
        7,
        "implied-constant calibration",
        base.rows.len() == 10 && finite && !base.flagged() && !fine.flagged() && worst_change <= 0.25,
        format!("max spread {worst_spread:.3}x, max refinement change {:.2}%", 100.0 * worst_change),
    );
}

#[test]
fn criterion_8_liouville() {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["liouville-zero", "liouville-sqrt"] {
        let run = run_scenario(&scenario(name)).unwrap();
        let r = &run.reports[0];
        let osc = r.quantities["oscillation"];
        ok &= r.status == Status::Pass && osc <= 1e-6;
        details.push(format!("{name} oscillation {osc:.2e}"));
    }
    let run = run_scenario(&scenario("liouville-square")).unwrap();
    ok &= run.status() == RunStatus::HypothesesUnmetOnly && !run.reports[0].quantities.contains_key("oscillation");
    details.push(format!("u^2: {:?}", run.reports[0].notes));
    verdict(8, "constancy of stationary solutions", ok, details.join(", "));
}

#[test]
fn criterion_9_determinism() {
    let mut configs = default_battery(64, 100);
    configs.push(scenario("golden-torus"));
    configs.push(scenario("liouville-sqrt"));
    let json = |jobs| -> Vec<String> {
        run_battery(&configs, jobs)
            .into_iter()
            .map(|r| RunReport::new(&r.unwrap()).to_json())
            .collect()
    };
    let a = json(1);
    let b = json(4);
    let tmp = std::env::temp_dir().join(format!("harnack-acceptance-{}", std::process::id()));
    let runs = |jobs| -> Vec<ScenarioRun> { run_battery(&configs, jobs).into_iter().map(Result::unwrap).collect() };
    write_runs(&tmp.join("a"), &runs(1), true).unwrap();
    write_runs(&tmp.join("b"), &runs(3), true).unwrap();
    let mut files_equal = true;
    for entry in std::fs::read_dir(tmp.join("a")).unwrap() {
        let name = entry.unwrap().file_name();
        let x = std::fs::read(tmp.join("a").join(&name)).unwrap();
        let y = std::fs::read(tmp.join("b").join(&name)).unwrap();
        files_equal &= x == y;
    }
    let _ = std::fs::remove_dir_all(&tmp);
    verdict(
        9,
        "byte-identical reports across runs and thread counts",
        a == b && files_equal,
        format!("{} scenarios", configs.len()),
    );
}
