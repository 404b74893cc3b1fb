//! The scalar inequality behind the differential Harnack bound.

/// Arguments of the inequality; admissible when `c, y > 0`, `λ > 1`,
/// `ε ∈ (0, 1)` and `y − λz > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaArgs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub y: f64,
    pub z: f64,
    pub lambda: f64,
    pub epsilon: f64,
}

impl LemmaArgs {
    pub fn admissible(&self) -> bool {
        self.c > 0.0
            && self.y > 0.0
            && self.lambda > 1.0
            && self.epsilon > 0.0
            && self.epsilon < 1.0
            && self.y - self.lambda * self.z > 0.0
    }

    /// `(y − z)² − a√y(y − λz) − by − c√y`
    pub fn lhs(&self) -> f64 {
        let s = self.y.sqrt();
        (self.y - self.z).powi(2) - self.a * s * (self.y - self.lambda * self.z) - self.b * self.y
            - self.c * s
    }

    pub fn rhs(&self) -> f64 {
        let l = self.lambda;
        let w = self.y - l * self.z;
        let lm1 = l - 1.0;
        w * w / (l * l)
            - self.a * self.a * l * l * w / (8.0 * lm1)
            - l * l * self.b * self.b / (4.0 * (1.0 - self.epsilon) * lm1 * lm1)
            - 0.75 * self.c.powf(4.0 / 3.0) * (l * l / (4.0 * self.epsilon * lm1 * lm1)).cbrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let t = LemmaArgs {
            a: 0.0,
            b: 0.0,
            c: 1.0,
            y: 1.0,
            z: 0.0,
            lambda: 2.0,
            epsilon: 0.5,
        };
        assert_eq!(t.lhs(), 0.0);
        let expected = 0.25 - 0.75 * 2f64.cbrt();
        assert!((t.rhs() - expected).abs() < 1e-14);
        assert!((t.rhs() + 0.6949).abs() < 1e-4);
        assert!(t.lhs() >= t.rhs());
    }
}
