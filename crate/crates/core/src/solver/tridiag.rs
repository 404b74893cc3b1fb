use crate::scalar::Real;

/// Solves `a_i x_{l(i)} + b_i x_i + c_i x_{r(i)} = d_i`.
///
/// Periodic systems wrap (`l(0) = n−1`, `r(n−1) = 0`) and are solved with
/// the Sherman-Morrison correction. Otherwise the first and last rows are
/// mirrored (`l(0) = r(0) = 1`, `l(n−1) = r(n−1) = n−2`).
pub fn solve<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T], periodic: bool) -> Vec<T> {
    let n = b.len();
    if periodic {
        return cyclic(a, b, c, d);
    }
    let mut lo = a.to_vec();
    let mut up = c.to_vec();
    up[0] = a[0] + c[0];
    lo[0] = T::zero();
    lo[n - 1] = a[n - 1] + c[n - 1];
    up[n - 1] = T::zero();
    thomas(&lo, b, &up, d)
}

/// Plain Thomas algorithm; `a[0]` and `c[n-1]` are ignored.
pub fn thomas<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> Vec<T> {
    let n = b.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = if i + 1 < n { c[i] / m } else { T::zero() };
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

fn cyclic<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> Vec<T> {
    let n = b.len();
    // Corner entries: `beta` couples row 0 to x_{n-1}, `alpha` row n-1 to x_0.
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = thomas(a, &bb, c, d);
    let mut e = vec![T::zero(); n];
    e[0] = gamma;
    e[n - 1] = alpha;
    let z = thomas(a, &bb, c, &e);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &[f64], b: &[f64], c: &[f64], d: &[f64], x: &[f64], periodic: bool) -> f64 {
        let n = b.len();
        (0..n)
            .map(|i| {
                let (l, r) = if periodic {
                    ((i + n - 1) % n, (i + 1) % n)
                } else if i == 0 {
                    (1, 1)
                } else if i == n - 1 {
                    (n - 2, n - 2)
                } else {
                    (i - 1, i + 1)
                };
                (a[i] * x[l] + b[i] * x[i] + c[i] * x[r] - d[i]).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn periodic_and_mirrored_systems() {
        let n = 9;
        let a: Vec<f64> = (0..n).map(|i| -1.0 - 0.1 * i as f64).collect();
        let c: Vec<f64> = (0..n).map(|i| -0.7 + 0.05 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 4.0 + (i as f64).sin()).collect();
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        for periodic in [true, false] {
            let x = solve(&a, &b, &c, &d, periodic);
            assert!(residual(&a, &b, &c, &d, &x, periodic) < 1e-13);
        }
    }
}
