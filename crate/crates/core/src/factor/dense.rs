//! Dense complex LU with partial pivoting, adjoint solves and a Hager
//! estimate of ‖A⁻¹‖₁.

use num_complex::Complex64 as C64;

pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn norm_1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.data[i * n + j] * x[j]).sum())
            .collect()
    }
}

pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Returns `None` on an exactly zero pivot.
    pub fn factor(a: &DenseMatrix) -> Option<Lu> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = lu[k * n + k].inv();
            let (top, bottom) = lu.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..k * n + n];
            for i in 0..n - k - 1 {
                let row = &mut bottom[i * n..i * n + n];
                let f = row[k] * inv;
                row[k] = f;
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    row[j] -= f * row_k[j];
                }
            }
        }
        Some(Lu { n, lu, perm })
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    /// Solves Aᴴ x = b.
    pub fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        // A = Pᵀ L U  ⇒  Aᴴ = Uᴴ Lᴴ P
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = s / self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Hager/Higham estimate of ‖A⁻¹‖₁.
    pub fn inverse_norm_1_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            let ny: f64 = y.iter().map(|v| v.norm()).sum();
            if ny <= est {
                break;
            }
            est = ny;
            let xi: Vec<C64> = y
                .iter()
                .map(|v| if v.norm() > 0.0 { v / v.norm() } else { C64::new(1.0, 0.0) })
                .collect();
            let z = self.solve_adjoint(&xi);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, t| if t.1 > acc.1 { t } else { acc });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = vec![C64::new(0.0, 0.0); n];
            x[j] = C64::new(1.0, 0.0);
        }
        // alternating-sign test vector guards against the estimator's blind spots
        let mut alt: Vec<C64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
            })
            .collect();
        alt = self.solve(&alt);
        let t = 2.0 * alt.iter().map(|v| v.norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_adjoint_solve() {
        let mut a = DenseMatrix::zeros(3);
        let vals = [
            [C64::new(2.0, 1.0), C64::new(0.5, 0.0), C64::new(0.0, 1.0)],
            [C64::new(1.0, 0.0), C64::new(3.0, -1.0), C64::new(0.2, 0.0)],
            [C64::new(0.0, 0.0), C64::new(1.0, 1.0), C64::new(4.0, 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, vals[i][j]);
            }
        }
        let lu = Lu::factor(&a).unwrap();
        let b = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.5)];
        let x = lu.solve(&b);
        let r = a.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).norm() < 1e-14);
        }
        let xa = lu.solve_adjoint(&b);
        for i in 0..3 {
            let s: C64 = (0..3).map(|k| a.at(k, i).conj() * xa[k]).sum();
            assert!((s - b[i]).norm() < 1e-14);
        }
    }
}
