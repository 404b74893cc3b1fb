use std::path::PathBuf;
use std::process::Command;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("harnack-lab-cli-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn lab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_harnack-lab"))
        .args(args)
        .env_remove("HARNACK_LAB_SEED")
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn verify(name: &str) -> (i32, PathBuf, String) {
    let dir = scratch(name);
    let cfg = scenario(name);
    let (code, _, err) = lab(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    (code, dir, err)
}

#[test]
fn golden_scenario_passes_and_report_agrees() {
    let (code, dir, err) = verify("golden-torus");
    assert_eq!(code, 0, "{err}");
    for f in ["manifest.json", "golden-torus.report.json", "golden-torus.margins.csv", "golden-torus.solution.csv"] {
        assert!(dir.join(f).is_file(), "{f} missing");
    }
    let (code, stdout, _) = lab(&["report", "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("golden-torus"));
}

#[test]
fn fault_injection_exits_with_violation() {
    let (code, _, err) = verify("fault-injection");
    assert_eq!(code, 1, "{err}");
}

#[test]
fn unmet_hypotheses_exit_three() {
    let (code, _, err) = verify("liouville-square");
    assert_eq!(code, 3, "{err}");
}

#[test]
fn malformed_config_exits_two() {
    let dir = scratch("malformed");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "name = \"bad\"\nseed = 1\n[grid]\nnx = \"many\"\n").unwrap();
    let (code, _, err) = lab(&["verify", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.toml"), "{err}");
}

#[test]
fn oversized_radius_exits_two() {
    let (code, _, err) = verify("radius-too-large");
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn solve_writes_snapshots_without_reports() {
    let dir = scratch("solve");
    let cfg = scenario("round-sphere");
    let (code, _, err) = lab(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.join("round-sphere.solution.csv")).unwrap();
    assert!(csv.starts_with("t,node,x,u\n"));
    assert!(csv.lines().count() > 65);
}

#[test]
fn fuzz_is_reproducible_under_a_seed() {
    let a = lab(&["--seed", "11", "fuzz", "--samples", "2000"]);
    let b = lab(&["fuzz", "--samples", "2000", "--seed", "11"]);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn identities_reject_unknown_geometry() {
    let (code, _, err) = lab(&["identities", "--geometry", "klein-bottle", "--base", "16"]);
    assert_ne!(code, 0);
    assert!(err.contains("klein-bottle"), "{err}");
}
