use std::path::PathBuf;

use harnack_core::estimates::Status;
use harnack_harness::{run_scenario, RunStatus, ScenarioConfig};

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"));
    ScenarioConfig::load(&path).unwrap()
}

#[test]
fn shipped_scenarios_have_expected_status() {
    for (name, want) in [
        ("golden-torus", RunStatus::Pass),
        ("fault-injection", RunStatus::Violation),
        ("liouville-zero", RunStatus::Pass),
        ("liouville-sqrt", RunStatus::Pass),
        ("liouville-square", RunStatus::HypothesesUnmetOnly),
        ("round-sphere", RunStatus::Pass),
    ] {
        let run = run_scenario(&scenario(name)).unwrap();
        for r in &run.reports {
            println!("{name}: {} {:?} {:?} {:?} {:?}", r.estimate, r.status, r.margins, r.implied_constant, r.notes);
        }
        assert_eq!(run.status(), want, "{name}");
        assert!(run.reports.iter().all(|r| r.config_hash.as_deref() == Some(run.config_hash.as_str())));
    }
}

#[test]
fn oversized_radius_is_a_config_error() {
    let e = run_scenario(&scenario("radius-too-large")).unwrap_err();
    assert!(e.is_config());
    assert!(e.to_string().contains("R too large for grid"), "{e}");
}

#[test]
fn unmet_liouville_skips_the_solve() {
    let run = run_scenario(&scenario("liouville-square")).unwrap();
    assert!(run.solution.is_none());
    assert_eq!(run.reports[0].status, Status::HypothesesUnmet);
}
