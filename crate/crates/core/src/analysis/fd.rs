//! Finite-difference weights on arbitrary stencils (Fornberg's recursion)
//! and window selection on partially valid grid lines.

/// Weights w[k][j] such that f^(k)(x0) ≈ Σ_j w[k][j] f(xs[j]) for k = 0..=m.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A window of up to `width` consecutive valid indices on a line of length `len`
/// that contains `i`, centred where possible. `None` if fewer than `min_width`.
pub fn window(i: usize, len: usize, width: usize, min_width: usize, valid: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
    if !valid(i) {
        return None;
    }
    let mut lo = i;
    while lo > 0 && valid(lo - 1) {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < len && valid(hi + 1) {
        hi += 1;
    }
    let avail = hi - lo + 1;
    let w = width.min(avail);
    if w < min_width {
        return None;
    }
    let half = w / 2;
    let start = i.saturating_sub(half).max(lo).min(hi + 1 - w);
    Some((start..start + w).collect())
}

/// Derivative weights of order `k` at node `i` of a uniform line with spacing `h`.
pub fn uniform_weights(i: usize, idx: &[usize], h: f64, k: usize) -> Vec<f64> {
    let xs: Vec<f64> = idx.iter().map(|&j| (j as f64 - i as f64) * h).collect();
    fornberg(0.0, &xs, k).swap_remove(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_weights() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn high_order_derivative_of_exp() {
        let h = 0.1;
        let idx: Vec<usize> = (0..11).collect();
        for i in [0, 3, 5, 10] {
            let w = uniform_weights(i, &idx, h, 1);
            let d: f64 = idx.iter().zip(&w).map(|(&j, w)| w * (j as f64 * h).exp()).sum();
            assert!((d - (i as f64 * h).exp()).abs() < 1e-9, "i={i}: {d}");
        }
    }

    #[test]
    fn windows_respect_invalid_nodes() {
        let valid = |j: usize| j != 4;
        assert_eq!(window(2, 10, 5, 3, valid), Some(vec![0, 1, 2, 3]));
        assert_eq!(window(7, 10, 5, 3, valid), Some(vec![5, 6, 7, 8, 9]));
        assert_eq!(window(4, 10, 5, 3, valid), None);
    }
}
