//! Explicit cut-off profiles and the constants measured from them.

use serde::Serialize;

const SAMPLES: usize = 10_000;
const INFLATION: f64 = 1.01;

/// Radial profile `ψ̄`: 1 on `[0, 1]`, 0 on `[2, ∞)`, quintic smoothstep in
/// between (so `C²`).
pub fn psi_bar(s: f64) -> (f64, f64, f64) {
    if s <= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    if s >= 2.0 {
        return (0.0, 0.0, 0.0);
    }
    let x = s - 1.0;
    let v = x * x * x * (x * (6.0 * x - 15.0) + 10.0);
    let d1 = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let d2 = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (1.0 - v, -d1, -d2)
}

fn h(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let e = (-1.0 / x).exp();
    let x2 = x * x;
    (e, e / x2, e * (1.0 - 2.0 * x) / (x2 * x2))
}

/// `C^∞` step from 0 (at `x <= 0`) to 1 (at `x >= 1`), with two derivatives.
pub fn smooth_step(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let (p, p1, p2) = h(x);
    let (q, q1, q2) = h(1.0 - x);
    let (q1, q2) = (-q1, q2);
    let d = p + q;
    let d1 = p1 + q1;
    let d2 = p2 + q2;
    let f = p / d;
    let f1 = (p1 * d - p * d1) / (d * d);
    let f2 = p2 / d - 2.0 * p1 * d1 / (d * d) - p * d2 / (d * d) + 2.0 * p * d1 * d1 / (d * d * d);
    (f, f1, f2)
}

/// Spatial factor of `φ̄` in `s = ϱ/R`: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn phi_space(s: f64) -> (f64, f64, f64) {
    let (v, d1, d2) = smooth_step(2.0 * s - 1.0);
    (1.0 - v, -2.0 * d1, -4.0 * d2)
}

/// Temporal factor of `φ̄` in `r = t/τ`: 0 at `r = 0`, 1 for `r >= 1`.
pub fn phi_time(r: f64) -> (f64, f64, f64) {
    smooth_step(r)
}

/// `φ̄(ϱ, t) = χ(ϱ/R) θ(t/τ)`.
pub fn phi_bar(rho: f64, t: f64, r: f64, tau: f64) -> f64 {
    phi_space(rho / r).0 * phi_time(t / tau).0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffConstants {
    /// `sup(−ψ̄′/√ψ̄)`
    pub c1: f64,
    /// `sup(−ψ̄″)`
    pub c2: f64,
    /// `sup θ′/√θ`
    pub c: f64,
    pub c_half: f64,
    pub c_three_quarters: f64,
}

impl CutoffConstants {
    /// `c_a` for `a ∈ {1/2, 3/4}`.
    pub fn c_a(&self, a: f64) -> Option<f64> {
        if a == 0.5 {
            Some(self.c_half)
        } else if a == 0.75 {
            Some(self.c_three_quarters)
        } else {
            None
        }
    }
}

fn sampled_sup(lo: f64, hi: f64, g: impl Fn(f64) -> Option<f64>) -> f64 {
    (0..=SAMPLES)
        .filter_map(|j| g(lo + (hi - lo) * j as f64 / SAMPLES as f64))
        .fold(0.0, f64::max)
        * INFLATION
}

/// Measures the cut-off constants by dense sampling with a 1% inflation.
pub fn build_cutoffs() -> CutoffConstants {
    let c1 = sampled_sup(1.0, 2.0, |s| {
        let (v, d1, _) = psi_bar(s);
        (v > 0.0).then(|| -d1 / v.sqrt())
    });
    let c2 = sampled_sup(0.0, 3.0, |s| Some(-psi_bar(s).2));
    let c = sampled_sup(0.0, 1.0, |r| {
        let (v, d1, _) = phi_time(r);
        (v > 0.0).then(|| d1 / v.sqrt())
    });
    let ca = |a: f64| {
        sampled_sup(0.5, 1.0, |s| {
            let (v, d1, d2) = phi_space(s);
            (v > 0.0).then(|| d1.abs().max(d2.abs()) / v.powf(a))
        })
    };
    CutoffConstants {
        c1,
        c2,
        c,
        c_half: ca(0.5),
        c_three_quarters: ca(0.75),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> (f64, f64, f64), x: f64) -> (f64, f64) {
        let h = 1e-5;
        let (a, _, _) = f(x - h);
        let (b, _, _) = f(x);
        let (c, _, _) = f(x + h);
        ((c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h))
    }

    #[test]
    fn derivatives_match_differences() {
        for &x in &[1.1, 1.37, 1.5, 1.93] {
            let (_, d1, d2) = psi_bar(x);
            let (n1, n2) = fd(psi_bar, x);
            assert!((d1 - n1).abs() < 1e-6 && (d2 - n2).abs() < 1e-4);
        }
        for &x in &[0.1, 0.3, 0.5, 0.77, 0.9] {
            let (_, d1, d2) = smooth_step(x);
            let (n1, n2) = fd(smooth_step, x);
            assert!((d1 - n1).abs() < 1e-6, "{x}: {d1} {n1}");
            assert!((d2 - n2).abs() < 1e-3, "{x}: {d2} {n2}");
        }
    }

    #[test]
    fn plateaus() {
        assert_eq!(psi_bar(0.5).0, 1.0);
        assert_eq!(psi_bar(3.0).0, 0.0);
        assert_eq!(phi_bar(0.3, 2.0, 1.0, 1.0), 1.0);
        assert_eq!(phi_bar(1.2, 2.0, 1.0, 1.0), 0.0);
        assert_eq!(phi_bar(0.2, 0.0, 1.0, 1.0), 0.0);
        assert!((smooth_step(0.5).0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_are_positive_and_reproducible() {
        let a = build_cutoffs();
        let b = build_cutoffs();
        assert_eq!(a, b);
        for v in [a.c1, a.c2, a.c, a.c_half, a.c_three_quarters] {
            assert!(v.is_finite() && v > 0.0);
        }
        // ψ̄″ = −60x(1−x)(1−2x) peaks at x = (3 − √3)/6.
        let x = (3.0 - 3f64.sqrt()) / 6.0;
        let peak = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
        assert!(a.c2 >= peak && a.c2 <= peak * 1.011);
    }
}
