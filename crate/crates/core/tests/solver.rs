use harnack_core::nonlinearity::{make_catalog_entry, Coefficients, NonlinearitySpec};
use harnack_core::solver::{sample_initial, solve_elliptic, solve_parabolic, SolverOptions};
use harnack_core::{BakryEmery, Expr, Family, Geometry};

fn torus(n: usize, length: f64, nx: usize, nt: usize, t_end: f64) -> Geometry {
    Geometry::new(
        Family::ConformalTorus {
            n,
            sigma: Expr::constant(1.0),
            length,
        },
        Expr::zero(),
        nx,
        nt,
        t_end,
        BakryEmery::Finite(n as f64),
    )
    .unwrap()
}

fn custom(src: &str) -> NonlinearitySpec {
    make_catalog_entry(
        "custom",
        &Coefficients {
            expr: Some(src.into()),
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn linear_heat_conserves_mass() {
    let g = torus(1, 1.0, 128, 200, 0.1);
    let u0 = sample_initial(&g, &Expr::parse("2 + cos(2*pi*x)").unwrap());
    let sol = solve_parabolic(&g, &Expr::zero(), &NonlinearitySpec::zero(), &u0, &SolverOptions::default()).unwrap();
    let mass = |u: &[f64]| u.iter().sum::<f64>() * g.grid().dx;
    let m0 = mass(&sol.u[0]);
    let m1 = mass(sol.u.last().unwrap());
    assert!((m0 - m1).abs() < 1e-8, "{m0} vs {m1}");
    assert!(sol.final_oscillation() < 2.0 * (-4.0 * std::f64::consts::PI.powi(2) * 0.1).exp() * 1.05);
}

#[test]
fn linear_reaction_grows_exponentially() {
    let g = torus(1, 1.0, 32, 400, 1.0);
    let u0 = vec![1.0; 32];
    let sol = solve_parabolic(&g, &Expr::zero(), &custom("u"), &u0, &SolverOptions::default()).unwrap();
    let end = *sol.u.last().unwrap().first().unwrap();
    assert!((end - 1f64.exp()).abs() < 1e-2 * 1f64.exp(), "{end}");
}

#[test]
fn constant_potential_term_grows_exponentially() {
    let g = torus(1, 1.0, 32, 400, 1.0);
    let u0 = vec![1.0; 32];
    let q = Expr::constant(-0.7);
    let sol = solve_parabolic(&g, &q, &NonlinearitySpec::zero(), &u0, &SolverOptions::default()).unwrap();
    let end = sol.u.last().unwrap()[7];
    assert!((end - (-0.7f64).exp()).abs() < 1e-2, "{end}");
}

#[test]
fn acceptance_torus_matches_exact_decay() {
    let l = 2.0 * std::f64::consts::PI;
    let g = torus(2, l, 256, 2000, 1.0);
    let u0 = sample_initial(&g, &Expr::parse("1 + 0.9*cos(x)").unwrap());
    let sol = solve_parabolic(&g, &Expr::zero(), &NonlinearitySpec::zero(), &u0, &SolverOptions::default()).unwrap();
    let err = (0..256)
        .map(|i| (sol.u[2000][i] - (1.0 + 0.9 * (-1f64).exp() * g.grid().coord(i).cos())).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
    assert!(sol.max_residual <= sol.residual_tol);
}

#[test]
fn elliptic_relaxation_examples() {
    let g = torus(2, 2.0 * std::f64::consts::PI, 64, 1, 1.0);
    let opts = SolverOptions::default();
    let u0 = sample_initial(&g, &Expr::parse("1 + 0.2*sin(x)").unwrap());
    let mean = u0.iter().sum::<f64>() / 64.0;
    let s = solve_elliptic(&g, &NonlinearitySpec::zero(), &u0, &opts).unwrap();
    assert!(s.stationary);
    assert!(s.u[0].iter().all(|v| (v - mean).abs() < 1e-8));

    let s = solve_elliptic(&g, &custom("1 - u"), &u0, &opts).unwrap();
    assert!(s.u[0].iter().all(|v| (v - 1.0).abs() < 1e-8));

    let u0 = sample_initial(&g, &Expr::parse("0.5 + 0.2*sin(x)").unwrap());
    let s = solve_elliptic(&g, &custom("u*(1 - u)"), &u0, &opts).unwrap();
    assert!(s.u[0].iter().all(|v| (v - 1.0).abs() < 1e-8));
}
