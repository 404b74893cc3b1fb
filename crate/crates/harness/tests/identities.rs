use harnack_core::Expr;
use harnack_harness::identities::{case_residuals, IdentityKind, ManufacturedCase};
use harnack_harness::{identity_residual_suite, IdentityGeometry};

#[test]
fn static_torus_log_ratio_converges_at_second_order() {
    let s = identity_residual_suite(&[IdentityGeometry::TorusStatic], 32).unwrap();
    let row = s.rows.iter().find(|r| r.identity == "h-log-ratio").unwrap();
    let order = row.order.unwrap();
    assert!((order - 2.0).abs() < 0.2, "{row:?}");
    assert!(s.passed());
}

#[test]
fn constant_solution_has_zero_residuals() {
    for g in IdentityGeometry::ALL {
        let case = ManufacturedCase {
            solution: Expr::constant(1.7),
            ..ManufacturedCase::standard(g)
        };
        for r in case_residuals(&case, 16).unwrap() {
            assert!(r.coarse <= 1e-9 && r.fine <= 1e-9, "{g}: {r:?}");
            assert!(r.passed);
        }
    }
}

#[test]
fn inequalities_hold_on_manufactured_solutions() {
    let s = identity_residual_suite(&IdentityGeometry::ALL, 32).unwrap();
    for r in s.rows.iter().filter(|r| r.kind == IdentityKind::Inequality) {
        assert_eq!(r.fine, 0.0, "{r:?}");
    }
}

#[test]
fn suite_rejects_bad_input() {
    assert!(identity_residual_suite(&[], 32).is_err());
    assert!(identity_residual_suite(&[IdentityGeometry::TorusStatic], 4).is_err());
    assert!("klein-bottle".parse::<IdentityGeometry>().is_err());
    assert_eq!("warped-hyperbolic".parse::<IdentityGeometry>().unwrap(), IdentityGeometry::WarpedHyperbolic);
}
