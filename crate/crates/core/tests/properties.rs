use std::f64::consts::PI;

use proptest::prelude::*;

use harnack_core::estimates::lemma::LemmaArgs;
use harnack_core::estimates::quantities::root_term;
use harnack_core::estimates::{harnack_elliptic_gamma, souplet_zhang_quantities, LiYauParams, LiYauQuantities};
use harnack_core::geometry::{FlowBounds, GeometryState, Normalization, Region};
use harnack_core::nonlinearity::NonlinearitySpec;
use harnack_core::{BakryEmery, Expr, Family, Geometry, WarpTopology};

fn warped(warp: &str, f: &str, topology: WarpTopology, r: (f64, f64), m: BakryEmery) -> Geometry {
    Geometry::new(
        Family::Warped {
            warp: Expr::parse(warp).unwrap(),
            topology,
            r_min: r.0,
            r_max: r.1,
        },
        Expr::parse(f).unwrap(),
        41,
        8,
        1.0,
        m,
    )
    .unwrap()
}

fn test_geometries(m: BakryEmery) -> Vec<Geometry> {
    vec![
        warped("r", "r^2/2", WarpTopology::Disc, (0.0, 3.0), m),
        warped("sin(r)", "0.3*cos(r)", WarpTopology::TwoPole, (0.0, PI), m),
        warped("sinh(r)*(1+0.2*t)", "0.1*r^2*(1+t)", WarpTopology::Annulus, (0.5, 2.5), m),
        Geometry::new(
            Family::ConformalTorus {
                n: 1,
                sigma: Expr::parse("exp(-t)").unwrap(),
                length: 2.0 * PI,
            },
            Expr::parse("sin(x)*(1+t)").unwrap(),
            41,
            8,
            1.0,
            m,
        )
        .unwrap(),
    ]
}

#[test]
fn large_m_recovers_ricci_f() {
    let big = test_geometries(BakryEmery::Finite(1e6));
    for g in &big {
        for i in 0..g.grid().nx {
            for t in [0.0, 0.5, 1.0] {
                let a = g.ricci_f(i, t).unwrap();
                let b = g.ricci_f_m(i, t).unwrap();
                for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
                    assert!((x - y).abs() <= 1e-4 * (1.0 + x.abs()), "{i} {t}: {x} vs {y}");
                }
            }
        }
    }
}

fn subregion(g: &Geometry, nodes: &[usize], times: &[usize]) -> Region<f64> {
    Region::new(times.iter().map(|&k| (g.time(k), nodes.to_vec())).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(which in 0usize..4, a in 0usize..41, b in 0usize..41, c in 0usize..41, k in 0usize..9) {
        let g = &test_geometries(BakryEmery::Finite(3.0))[which];
        let t = g.time(k);
        let d = |x, y| g.geodesic_distance(x, y, t);
        prop_assert_eq!(d(a, b), d(b, a));
        prop_assert!(d(a, b) >= 0.0);
        prop_assert_eq!(d(a, a), 0.0);
        if a != b {
            prop_assert!(d(a, b) > 0.0);
        }
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-12);
    }

    #[test]
    fn bounds_grow_with_the_region(which in 0usize..4, lo in 0usize..20, len in 1usize..20, extra in 1usize..20, k in 1usize..8) {
        let g = &test_geometries(BakryEmery::Finite(3.0))[which];
        let small: Vec<usize> = (lo..lo + len).collect();
        let large: Vec<usize> = (lo.saturating_sub(extra)..(lo + len + extra).min(41)).collect();
        let t_small: Vec<usize> = (0..k).collect();
        let t_large: Vec<usize> = (0..=8).collect();
        // (n − 1) k₁ is undefined on the one-dimensional torus.
        let norms: &[Normalization] = if g.dim() == 1 {
            &[Normalization::RicciFM]
        } else {
            &[Normalization::RicciF, Normalization::RicciFM]
        };
        for &norm in norms {
            let a = g.extract_flow_bounds(&subregion(g, &small, &t_small), norm).unwrap();
            let b = g.extract_flow_bounds(&subregion(g, &large, &t_large), norm).unwrap();
            for (x, y) in [
                (a.k1, b.k1),
                (a.k2_lower, b.k2_lower),
                (a.k2_upper, b.k2_upper),
                (a.k3, b.k3),
                (a.ell1, b.ell1),
                (a.ell2, b.ell2),
                (a.k, b.k),
                (a.super_flow_k, b.super_flow_k),
            ] {
                prop_assert!(x <= y + 1e-12, "{} > {}", x, y);
            }
        }
    }

    #[test]
    fn differential_harnack_blocks_shrink_in_lambda(a in 0.0f64..20.0, b in 0.0f64..20.0, l1 in 1.01f64..6.0, dl in 0.01f64..4.0, eps in 0.01f64..0.99) {
        let zero = FlowBounds::zero(Normalization::RicciFM);
        let p = |lambda| LiYauParams { lambda, epsilon: eps, m: 3.0, n: 2 };
        let qa = LiYauQuantities { a, ..Default::default() };
        let qb = LiYauQuantities { b, ..Default::default() };
        prop_assert!(root_term(&qa, &zero, &p(l1 + dl)) <= root_term(&qa, &zero, &p(l1)) + 1e-12);
        prop_assert!(root_term(&qb, &zero, &p(l1 + dl)) <= root_term(&qb, &zero, &p(l1)) + 1e-12);
    }

    #[test]
    fn positive_parts_are_subadditive(
        kind in 0usize..4,
        coef in -3.0f64..3.0,
        q0 in -2.0f64..2.0,
        q1 in -2.0f64..2.0,
        frac in 0.01f64..1.0,
        node in 0usize..64,
    ) {
        let sigmas = ["u*log(u)", "u^3", "sin(x)*u^2", "exp(-u)*cos(x)"];
        let sigma = NonlinearitySpec::unchecked("s", Expr::parse(&format!("{coef}*{}", sigmas[kind])).unwrap());
        let q = Expr::parse(&format!("{q0} + {q1}*sin(x)")).unwrap();
        let both = sigma.plus_linear(&q);
        let g = Geometry::new(
            Family::ConformalTorus { n: 1, sigma: Expr::constant(1.0), length: 2.0 * PI },
            Expr::zero(), 64, 4, 1.0, BakryEmery::Finite(1.0),
        ).unwrap();
        let x = g.coord(node);
        let (qv, gq) = (q0 + q1 * x.sin(), (q1 * x.cos()).abs());
        let d = 2.0;
        let u = frac * d;
        let s = souplet_zhang_quantities(0.0, 0.0, &sigma.evaluate_bundle(&g, 0.0, node, u).unwrap(), u, d).unwrap();
        let c = souplet_zhang_quantities(0.0, 0.0, &both.evaluate_bundle(&g, 0.0, node, u).unwrap(), u, d).unwrap();
        prop_assert!(c.r <= s.r + qv.max(0.0) + 1e-12);
        prop_assert!(c.p <= s.p + gq + 1e-12);
    }

    #[test]
    fn algebraic_lemma_holds(
        a in -10.0f64..10.0, b in -10.0f64..10.0, z in -10.0f64..10.0,
        c in 1e-9f64..10.0, y in 1e-9f64..10.0, lambda in 1.0001f64..10.0, epsilon in 1e-6f64..0.999999,
    ) {
        let args = LemmaArgs { a, b, c, y, z, lambda, epsilon };
        prop_assume!(args.admissible());
        prop_assert!(args.lhs() - args.rhs() >= -1e-12, "{:?}", args);
    }

    #[test]
    fn elliptic_exponent_in_unit_interval(d in 0.0f64..50.0, bracket in 0.0f64..50.0, c in 1e-3f64..10.0) {
        let g = harnack_elliptic_gamma(d, bracket, c);
        prop_assert!(g <= 1.0);
        prop_assert!(g >= 0.0);
        if d * bracket * c < 700.0 {
            prop_assert!(g > 0.0);
        }
    }
}

#[test]
fn single_precision_pipeline() {
    use harnack_core::solver::{sample_initial, solve_parabolic, SolverOptions};
    let g: GeometryState<f32> = GeometryState::new(
        Family::ConformalTorus {
            n: 1,
            sigma: Expr::constant(1.0),
            length: 2.0 * PI,
        },
        Expr::zero(),
        32,
        50,
        0.5,
        BakryEmery::Finite(1.0),
    )
    .unwrap();
    let u0 = sample_initial(&g, &Expr::parse("1 + 0.5*cos(x)").unwrap());
    let sol = solve_parabolic(&g, &Expr::zero(), &NonlinearitySpec::zero(), &u0, &SolverOptions::default()).unwrap();
    let end = sol.u.last().unwrap();
    let exact = |x: f32| 1.0 + 0.5 * (-0.5f32).exp() * x.cos();
    for (i, &v) in end.iter().enumerate() {
        assert!((v - exact(g.coord(i))).abs() < 5e-3, "{i}: {v}");
    }
    let r = g.ricci_f(3, 0.25).unwrap();
    assert_eq!(r.diag[0], 0.0f32);
}
