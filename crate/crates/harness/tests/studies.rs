use harnack_harness::{calibration_study, default_battery, fuzz_algebraic_lemma};

#[test]
fn fuzz_is_reproducible() {
    let a = fuzz_algebraic_lemma(2000, 3);
    let b = fuzz_algebraic_lemma(2000, 3);
    assert_eq!(a, b);
    assert_eq!(a.accepted, 2000);
    assert_eq!(a.violations, 0);
    assert_ne!(fuzz_algebraic_lemma(2000, 4).worst_args, a.worst_args);
}

#[test]
fn calibration_rejects_bad_batteries() {
    assert!(calibration_study(&[], 1).unwrap_err().is_config());
    let mut mixed = default_battery(16, 20);
    mixed[0].geometry.n = Some(1);
    assert!(calibration_study(&mixed, 1).unwrap_err().is_config());
}

#[test]
fn linear_heat_across_grids_is_consistent() {
    let battery: Vec<_> = [(32, 40), (48, 60), (64, 80)]
        .into_iter()
        .map(|(nx, nt)| {
            let mut c = default_battery(nx, nt).remove(0);
            c.name = format!("linear-heat-{nx}");
            c
        })
        .collect();
    let t = calibration_study(&battery, 2).unwrap();
    for s in &t.spreads {
        assert!(s.ratio < 1.5, "{s:?}");
    }
    assert!(t.to_csv().starts_with("scenario,estimate,c_min\n"));
}
