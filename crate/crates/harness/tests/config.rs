use harnack_harness::config::{EstimateKind, Mode};
use harnack_harness::{run_scenario, ScenarioConfig};

const BASE: &str = r#"
name = "t"
[geometry]
family = "conformal-torus"
n = 1
m = 1.0
[grid]
nx = 32
nt = 40
t_end = 0.5
[equation]
initial = "1 + 0.5*cos(x)"
[estimates]
select = ["hamilton-global"]
"#;

fn with(extra: &str) -> String {
    format!("{BASE}{extra}")
}

#[test]
fn defaults_are_filled_in() {
    let c = ScenarioConfig::from_toml(BASE).unwrap();
    assert_eq!(c.equation.mode, Mode::Parabolic);
    assert_eq!(c.estimates.lambda, 1.5);
    assert_eq!(c.estimates.epsilons, vec![0.1, 0.5, 0.9]);
    assert_eq!(c.tolerance.c_tol, 10.0);
    assert_eq!(c.estimates.select, vec![EstimateKind::HamiltonGlobal]);
}

#[test]
fn malformed_configs_are_rejected() {
    for bad in [
        "name = ",
        &BASE.replace("nx = 32", "nx = \"many\""),
        &BASE.replace("family = \"conformal-torus\"", "family = \"klein\""),
        &with("[tolerance]\nc_toll = 3.0\n"),
        &BASE.replace("initial = \"1 + 0.5*cos(x)\"", ""),
        &with("x0 = 3\n"),
        &BASE.replace("select = [\"hamilton-global\"]", "select = [\"liouville\"]"),
        &with("lambda = 0.5\n"),
    ] {
        let e = ScenarioConfig::from_toml(bad).unwrap_err();
        assert!(e.is_config(), "{bad}: {e}");
    }
}

#[test]
fn bad_expressions_fail_when_building() {
    let c = ScenarioConfig::from_toml(&BASE.replace("1 + 0.5*cos(x)", "1 + u")).unwrap();
    assert!(run_scenario(&c).unwrap_err().is_config());
    let c = ScenarioConfig::from_toml(&with("[equation.nonlinearity]\nentry = \"quartic\"\n")).unwrap();
    assert!(run_scenario(&c).unwrap_err().is_config());
    let c = ScenarioConfig::from_toml(&BASE.replace("m = 1.0", "m = \"lots\"")).unwrap();
    assert!(run_scenario(&c).unwrap_err().is_config());
}

#[test]
fn m_accepts_infinity() {
    let c = ScenarioConfig::from_toml(&BASE.replace("m = 1.0", "m = \"infinity\"")).unwrap();
    let g = c.build_geometry().unwrap();
    assert_eq!(g.bakry_emery(), harnack_core::BakryEmery::Infinite);
}

#[test]
fn hash_tracks_content() {
    let a = ScenarioConfig::from_toml(BASE).unwrap();
    let b = ScenarioConfig::from_toml(BASE).unwrap();
    let c = ScenarioConfig::from_toml(&BASE.replace("nt = 40", "nt = 41")).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn initial_data_from_csv() {
    let dir = std::env::temp_dir().join(format!("harnack-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv: String = std::iter::once("u0".to_string())
        .chain((0..32).map(|i| format!("{}", 1.0 + 0.1 * (i as f64 / 5.0).sin())))
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(dir.join("u0.csv"), csv).unwrap();
    let text = BASE.replace("initial = \"1 + 0.5*cos(x)\"", "initial_csv = \"u0.csv\"");
    std::fs::write(dir.join("s.toml"), &text).unwrap();
    let c = ScenarioConfig::load(&dir.join("s.toml")).unwrap();
    let g = c.build_geometry().unwrap();
    let u0 = c.initial_values(&g).unwrap();
    assert_eq!(u0.len(), 32);
    assert!((u0[5] - (1.0 + 0.1 * 1f64.sin())).abs() < 1e-12);

    std::fs::write(dir.join("u0.csv"), "value\n1.0\n").unwrap();
    assert!(c.initial_values(&g).unwrap_err().is_config());
    std::fs::write(dir.join("u0.csv"), "u0\n1.0\n2.0\n").unwrap();
    assert!(c.initial_values(&g).unwrap_err().is_config());
    let _ = std::fs::remove_dir_all(&dir);
}
