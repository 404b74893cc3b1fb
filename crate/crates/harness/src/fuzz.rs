//! Random search for counterexamples to the scalar inequality behind the
//! differential Harnack bound.

use harnack_core::estimates::lemma::LemmaArgs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// `lhs − rhs` below this counts as a violation.
pub const SLACK: f64 = -1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FuzzOutcome {
    pub seed: u64,
    pub accepted: usize,
    pub rejected: usize,
    pub violations: usize,
    /// Smallest `lhs − rhs` seen.
    pub worst_gap: f64,
    /// Arguments of the worst sample, as `[a, b, c, y, z, λ, ε]`.
    pub worst_args: [f64; 7],
}

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.gen();
        if v > 0.0 {
            return v;
        }
    }
}

/// Draws admissible tuples until `samples` have been accepted: `a, b, z`
/// uniform on `[−10, 10]`, `c, y` on `(0, 10]`, `λ` on `(1, 10]`, `ε` on
/// `(0, 1)`, rejecting `y − λz <= 0`.
pub fn fuzz_algebraic_lemma(samples: usize, seed: u64) -> FuzzOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FuzzOutcome {
        seed,
        accepted: 0,
        rejected: 0,
        violations: 0,
        worst_gap: f64::INFINITY,
        worst_args: [0.0; 7],
    };
    while out.accepted < samples {
        let args = LemmaArgs {
            a: rng.gen_range(-10.0..=10.0),
            b: rng.gen_range(-10.0..=10.0),
            z: rng.gen_range(-10.0..=10.0),
            c: 10.0 * open_unit(&mut rng),
            y: 10.0 * open_unit(&mut rng),
            lambda: 1.0 + 9.0 * open_unit(&mut rng),
            epsilon: loop {
                let e = open_unit(&mut rng);
                if e < 1.0 {
                    break e;
                }
            },
        };
        if !args.admissible() {
            out.rejected += 1;
            continue;
        }
        out.accepted += 1;
        let gap = args.lhs() - args.rhs();
        if gap < SLACK {
            out.violations += 1;
        }
        if gap < out.worst_gap {
            out.worst_gap = gap;
            out.worst_args = [args.a, args.b, args.c, args.y, args.z, args.lambda, args.epsilon];
        }
    }
    out
}
