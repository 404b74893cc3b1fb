use std::f64::consts::PI;

use harnack_core::geometry::{Normalization, Region};
use harnack_core::{BakryEmery, Expr, Family, Geometry, WarpTopology};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn torus(n: usize, sigma: &str, length: f64, nx: usize) -> Geometry {
    Geometry::new(
        Family::ConformalTorus {
            n,
            sigma: Expr::parse(sigma).unwrap(),
            length,
        },
        Expr::zero(),
        nx,
        10,
        1.0,
        BakryEmery::Finite(n as f64),
    )
    .unwrap()
}

fn warped(warp: &str, f: &str, topology: WarpTopology, r: (f64, f64), nx: usize, m: BakryEmery) -> Geometry {
    Geometry::new(
        Family::Warped {
            warp: Expr::parse(warp).unwrap(),
            topology,
            r_min: r.0,
            r_max: r.1,
        },
        Expr::parse(f).unwrap(),
        nx,
        10,
        1.0,
        m,
    )
    .unwrap()
}

fn sphere(nx: usize) -> Geometry {
    warped("sin(r)", "0", WarpTopology::TwoPole, (0.0, PI), nx, BakryEmery::Finite(2.0))
}

#[test]
fn metric_components() {
    let g = torus(2, "1", 1.0, 16);
    let m = g.metric_at(3, 0.4).unwrap();
    assert_eq!(m.c, [[1.0, 0.0], [0.0, 1.0]]);

    let s = sphere(101);
    assert!(close(s.coord(50), PI / 2.0, 1e-12));
    let m = s.metric_at(50, 0.0).unwrap();
    assert!(close(m.c[0][0], 1.0, 1e-12) && close(m.c[1][1], 1.0, 1e-12));
    assert!(m.is_symmetric() && m.is_positive_definite());

    let c = torus(2, "exp(-t)", 1.0, 16);
    let m = c.metric_at(0, 1.0).unwrap();
    assert!(close(m.c[0][0], (-2.0f64).exp(), 1e-14));
    assert!(close(m.c[1][1], (-2.0f64).exp(), 1e-14));
    assert_eq!(m.c[0][1], 0.0);
}

#[test]
fn degenerate_warp_is_rejected() {
    let r = Geometry::new(
        Family::Warped {
            warp: Expr::parse("r - 1").unwrap(),
            topology: WarpTopology::Annulus,
            r_min: 0.5,
            r_max: 2.0,
        },
        Expr::zero(),
        16,
        4,
        1.0,
        BakryEmery::Finite(2.0),
    );
    assert!(r.is_err());
}

#[test]
fn bakry_emery_curvature() {
    let g = torus(2, "1", 1.0, 16);
    assert_eq!(g.ricci_f(5, 0.0).unwrap().diag, [0.0, 0.0]);

    let s = sphere(65);
    for i in [0, 10, 32, 64] {
        let r = s.ricci_f(i, 0.0).unwrap();
        assert!(close(r.diag[0], 1.0, 1e-6) && close(r.diag[1], 1.0, 1e-6), "{i}: {:?}", r.diag);
    }

    // Gaussian shrinking soliton: Ric_f = g.
    let gs = warped("r", "r^2/2", WarpTopology::Disc, (0.0, 3.0), 61, BakryEmery::Finite(3.0));
    for i in [0, 7, 30, 60] {
        let r = gs.ricci_f(i, 0.0).unwrap();
        assert!(close(r.diag[0], 1.0, 1e-9) && close(r.diag[1], 1.0, 1e-6), "{i}: {:?}", r.diag);
        let rm = gs.ricci_f_m(i, 0.0).unwrap();
        let x = gs.coord(i);
        assert!(close(rm.diag[0], 1.0 - x * x, 1e-9), "{i}: {:?}", rm.diag);
        assert!(close(rm.diag[1], 1.0, 1e-6));
    }

    let inf = warped("r", "r^2/2", WarpTopology::Disc, (0.0, 3.0), 61, BakryEmery::Infinite);
    assert_eq!(inf.ricci_f_m(20, 0.0).unwrap(), inf.ricci_f(20, 0.0).unwrap());
}

#[test]
fn equal_m_and_n_needs_constant_potential() {
    let r = Geometry::new(
        Family::ConformalTorus {
            n: 1,
            sigma: Expr::constant(1.0),
            length: 2.0 * PI,
        },
        Expr::parse("sin(x)").unwrap(),
        16,
        4,
        1.0,
        BakryEmery::Finite(1.0),
    );
    assert!(r.is_err());
}

#[test]
fn witten_laplacian_examples() {
    let len = 2.0;
    let nx = 200;
    let g = torus(1, "1", len, nx);
    let k = 2.0 * PI / len;
    let u: Vec<f64> = (0..nx).map(|i| (k * g.coord(i)).sin()).collect();
    let lu = g.witten_laplacian_apply(&u, 0.0);
    for i in 0..nx {
        assert!(close(lu[i], -k * k * u[i], 1e-3), "{i}");
    }

    // Flat strip chart with f = x: u'' − f'u' = 2 − 2x.
    let s = warped("1", "r", WarpTopology::Annulus, (0.0, 1.0), 41, BakryEmery::Finite(3.0));
    let u: Vec<f64> = (0..41).map(|i| s.coord(i).powi(2)).collect();
    let lu = s.witten_laplacian_apply(&u, 0.0);
    for i in 1..40 {
        assert!(close(lu[i], 2.0 - 2.0 * s.coord(i), 1e-10), "{i}: {}", lu[i]);
    }

    let c = vec![3.5; nx];
    assert!(g.witten_laplacian_apply(&c, 0.0).iter().all(|&v| v.abs() < 1e-12));
}

#[test]
fn distances() {
    let s = sphere(65);
    assert!(close(s.geodesic_distance(0, 64, 0.0), PI, 1e-12));
    assert_eq!(s.geodesic_distance(17, 17, 0.0), 0.0);

    let g = torus(1, "2", 1.0, 10);
    assert!(close(g.geodesic_distance(0, 3, 0.0), 0.6, 1e-12));
    // Wraps around the short way.
    assert!(close(g.geodesic_distance(0, 8, 0.0), 0.4, 1e-12));
}

#[test]
fn metric_speed_examples() {
    let s = sphere(33);
    let v = s.metric_speed_tensor(10, 0.3).unwrap();
    assert_eq!((v.trace, v.div, v.grad_norm), (0.0, 0.0, 0.0));

    let k = 0.5;
    let c = torus(2, "exp(0.5*t)", 1.0, 16);
    let v = c.metric_speed_tensor(3, 0.7).unwrap();
    assert!(close(v.v.diag[0], k, 1e-12) && close(v.v.diag[1], k, 1e-12));
    assert!(close(v.trace, 2.0 * k, 1e-12));
    assert!(close(v.div - 0.5 * v.grad_trace, 0.0, 1e-12));
    assert!(close(v.grad_norm, 0.0, 1e-12));

    let w = warped("(1+t)*sin(r)", "0", WarpTopology::Annulus, (0.3, PI - 0.3), 33, BakryEmery::Finite(2.0));
    for t in [0.0, 0.5, 1.0] {
        let v = w.metric_speed_tensor(9, t).unwrap();
        assert!(close(v.v.diag[0], 0.0, 1e-12));
        assert!(close(v.v.diag[1], 1.0 / (1.0 + t), 1e-12));
        assert!(close(v.grad_trace, 0.0, 1e-12));
    }
}

#[test]
fn flow_bound_examples() {
    let s = sphere(33);
    let b = s
        .extract_flow_bounds(&Region::whole(&s), Normalization::RicciF)
        .unwrap();
    assert!(close(b.k1, 0.0, 1e-12) && close(b.k2_lower, 0.0, 1e-12) && close(b.k3, 0.0, 1e-12));
    assert!(close(b.ell1, 0.0, 1e-12) && close(b.ell2, 0.0, 1e-12));
    assert!(close(b.super_flow_k, -1.0, 1e-6), "{}", b.super_flow_k);

    let h = warped("sinh(r)", "0", WarpTopology::Annulus, (0.5, 3.0), 41, BakryEmery::Finite(2.0));
    let b = h
        .extract_flow_bounds(&Region::whole(&h), Normalization::RicciF)
        .unwrap();
    assert!(close(b.k1, 1.0, 1e-9), "{}", b.k1);
    assert!(close(b.k, 1.0, 1e-9));

    let c = torus(2, "exp(-t)", 1.0, 16);
    let b = c
        .extract_flow_bounds(&Region::whole(&c), Normalization::RicciF)
        .unwrap();
    assert!(close(b.k2_lower, 1.0, 1e-12) && close(b.k2_upper, 0.0, 1e-12));
    assert!(close(b.k, (b.k1 * b.k1 + b.k2_lower * b.k2_lower).sqrt(), 1e-15));

    assert!(c
        .extract_flow_bounds(&Region::new(vec![]), Normalization::RicciF)
        .is_err());
}

#[test]
fn distance_laplacian_at_unit_radius() {
    let s = sphere(129);
    let v = s.gamma_delta_f(0, 1.0).unwrap();
    assert!(close(v, 1f64.tan().recip(), 1e-6), "{v}");

    let h = warped("sinh(r)", "0", WarpTopology::Disc, (0.0, 4.0), 81, BakryEmery::Finite(2.0));
    let v = h.gamma_delta_f(0, 1.0).unwrap();
    assert!(close(v, 1f64.tanh().recip(), 1e-6), "{v}");

    let g = torus(2, "1", 8.0, 64);
    let v = g.gamma_delta_f(0, 1.0).unwrap();
    assert!(close(v, 1.0, 1e-9), "{v}");
}

#[test]
fn comparison_examples() {
    let s = sphere(129);
    let c = s
        .laplacian_comparison_check(2.0, 0.0, 0, 0.2, 2.5, 1e-9)
        .unwrap();
    assert!(c.holds && c.samples > 0);

    let h = warped("sinh(r)", "0", WarpTopology::Disc, (0.0, 4.0), 161, BakryEmery::Finite(2.0));
    let c = h
        .laplacian_comparison_check(2.0, 1.0, 0, 0.2, 2.0, 1e-3)
        .unwrap();
    assert!(c.holds && c.worst_margin >= -1e-3 && c.worst_margin < 1e-6, "{c:?}");

    // Gaussian soliton: Δ_f ϱ = 1/r − r about the pole.
    let gs = warped("r", "r^2/2", WarpTopology::Disc, (0.0, 3.0), 61, BakryEmery::Finite(3.0));
    for rho in [0.5, 1.0, 2.0] {
        for v in gs.distance_laplacian(0, rho, 0.0).unwrap() {
            assert!(close(v, 1.0 / rho - rho, 1e-9), "{rho}: {v}");
        }
    }
    let region = Region::whole(&gs);
    let b = gs
        .extract_flow_bounds(&region, Normalization::RicciFM)
        .unwrap();
    let c = gs
        .laplacian_comparison_check(3.0, b.k1, 0, 0.2, 2.5, 1e-9)
        .unwrap();
    assert!(c.holds, "{c:?}");
}
