//! Small dense complex matrices (2×2 and 4×4).
//!
//! Storage is a fixed 4×4 array so that `Mat` is `Copy` and allocation free;
//! only the leading `n×n` block is meaningful.

use num_complex::Complex64 as C64;
use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    n: usize,
    a: [C64; 16],
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "unsupported matrix size {n}");
        Mat { n, a: [ZERO; 16] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * 4 + i] = ONE;
        }
        m
    }

    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), n, "row {i} has wrong length");
            for (j, v) in r.iter().enumerate() {
                m.a[i * 4 + j] = *v;
            }
        }
        m
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.as_ref().iter().enumerate() {
                m.a[i * 4 + j] = C64::new(*v, 0.0);
            }
        }
        m
    }

    pub fn diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i * 4 + i] = *v;
        }
        m
    }

    pub fn real_diag(d: &[f64]) -> Self {
        let v: Vec<C64> = d.iter().map(|x| C64::new(*x, 0.0)).collect();
        Self::diag(&v)
    }

    /// Elementary matrix E_ij (1-based indices, as in the usual notation).
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n);
        m[(i - 1, j - 1)] = ONE;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i * 4 + j] *= s;
            }
        }
        m
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[j * 4 + i] = self.a[i * 4 + j];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        let mut m = *self;
        for v in m.a.iter_mut() {
            *v = v.conj();
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.a[i * 4 + i]).sum()
    }

    pub fn commutator(&self, other: &Mat) -> Mat {
        *self * *other - *other * *self
    }

    pub fn norm_fro(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i * 4 + j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Induced 1-norm (maximum column sum).
    pub fn norm_1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.a[i * 4 + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        let mut s: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s = s.max(self.a[i * 4 + j].norm());
            }
        }
        s
    }

    pub fn dist(&self, other: &Mat) -> f64 {
        (*self - *other).norm_fro()
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn det(&self) -> C64 {
        let (lu, _, sign) = match self.lu() {
            Some(x) => x,
            None => return ZERO,
        };
        let mut d = C64::new(sign, 0.0);
        for i in 0..self.n {
            d *= lu.a[i * 4 + i];
        }
        d
    }

    /// Partial-pivot LU; returns (packed LU, permutation, sign).
    fn lu(&self) -> Option<(Mat, [usize; 4], f64)> {
        let n = self.n;
        let mut m = *self;
        let mut perm = [0, 1, 2, 3];
        let mut sign = 1.0;
        for k in 0..n {
            let mut p = k;
            let mut best = m.a[k * 4 + k].norm();
            for i in k + 1..n {
                let v = m.a[i * 4 + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    m.a.swap(k * 4 + j, p * 4 + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let piv = m.a[k * 4 + k];
            for i in k + 1..n {
                let f = m.a[i * 4 + k] / piv;
                m.a[i * 4 + k] = f;
                for j in k + 1..n {
                    let t = m.a[k * 4 + j];
                    m.a[i * 4 + j] -= f * t;
                }
            }
        }
        Some((m, perm, sign))
    }

    pub fn inverse(&self) -> Result<Mat> {
        let n = self.n;
        let scale = self.max_abs();
        let (lu, perm, _) = self.lu().ok_or(Error::SingularMatrix)?;
        for i in 0..n {
            if lu.a[i * 4 + i].norm() <= 1e-300_f64.max(scale * 1e-15) {
                return Err(Error::SingularMatrix);
            }
        }
        let mut inv = Mat::zeros(n);
        for col in 0..n {
            let mut x = [ZERO; 4];
            for i in 0..n {
                x[i] = if perm[i] == col { ONE } else { ZERO };
            }
            for i in 0..n {
                for j in 0..i {
                    let t = x[j];
                    x[i] -= lu.a[i * 4 + j] * t;
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    let t = x[j];
                    x[i] -= lu.a[i * 4 + j] * t;
                }
                x[i] /= lu.a[i * 4 + i];
            }
            for i in 0..n {
                inv.a[i * 4 + col] = x[i];
            }
        }
        Ok(inv)
    }

    /// Matrix exponential by scaling and squaring with a Taylor core.
    pub fn exp(&self) -> Mat {
        let n = self.n;
        let norm = self.norm_1();
        let mut s = 0;
        if norm > 0.25 {
            s = (norm / 0.25).log2().ceil() as i32;
        }
        let x = self.scale_re(0.5f64.powi(s));
        let mut term = Mat::identity(n);
        let mut sum = Mat::identity(n);
        for k in 1..=18 {
            term = (term * x).scale_re(1.0 / k as f64);
            sum += term;
            if term.max_abs() < 1e-18 * sum.max_abs() {
                break;
            }
        }
        for _ in 0..s {
            sum = sum * sum;
        }
        sum
    }

    /// Principal square root by the Denman-Beavers iteration.
    pub fn sqrt(&self) -> Result<Mat> {
        let n = self.n;
        let mut y = *self;
        let mut z = Mat::identity(n);
        for _ in 0..100 {
            let yi = y.inverse()?;
            let zi = z.inverse()?;
            let y1 = (y + zi).scale_re(0.5);
            let z1 = (z + yi).scale_re(0.5);
            let delta = y1.dist(&y);
            y = y1;
            z = z1;
            if delta <= 1e-15 * y.norm_fro().max(1.0) {
                let yy = y * y;
                if yy.dist(self) <= 1e-11 * self.norm_fro().max(1.0) {
                    return Ok(y);
                }
            }
        }
        if (y * y).dist(self) <= 1e-10 * self.norm_fro().max(1.0) {
            Ok(y)
        } else {
            Err(Error::SingularMatrix)
        }
    }

    /// Principal logarithm for matrices with ||M - I|| < 1.
    pub fn log_near_id(&self) -> Result<Mat> {
        let n = self.n;
        let id = Mat::identity(n);
        let d = (*self - id).norm_1();
        if !(d < 1.0) {
            return Err(Error::LogDomain(d));
        }
        let mut m = *self;
        let mut k = 0;
        while (m - id).norm_1() > 0.05 && k < 40 {
            m = m.sqrt()?;
            k += 1;
        }
        let y = m - id;
        let mut term = y;
        let mut sum = y;
        for j in 2..60 {
            term = term * y;
            let c = if j % 2 == 0 { -1.0 } else { 1.0 } / j as f64;
            let t = term.scale_re(c);
            sum += t;
            if t.max_abs() < 1e-18 {
                break;
            }
        }
        Ok(sum.scale_re(2f64.powi(k)))
    }

    /// Principal logarithm: square roots bring M within 1/2 of Id, then the series.
    pub fn log(&self) -> Result<Mat> {
        let id = Mat::identity(self.n);
        let d = (*self - id).norm_1();
        let mut m = *self;
        let mut k = 0;
        while (m - id).norm_1() >= 0.5 {
            if k == 40 {
                return Err(Error::LogDomain(d));
            }
            m = m.sqrt().map_err(|_| Error::LogDomain(d))?;
            k += 1;
        }
        Ok(m.log_near_id()?.scale_re(2f64.powi(k)))
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.n).map(|j| self.a[i * 4 + j]).collect()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i * 4 + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i * 4 + j]
    }
}

impl Add for Mat {
    type Output = Mat;
    #[inline]
    fn add(mut self, rhs: Mat) -> Mat {
        self += rhs;
        self
    }
}

impl AddAssign for Mat {
    #[inline]
    fn add_assign(&mut self, rhs: Mat) {
        debug_assert_eq!(self.n, rhs.n);
        for k in 0..16 {
            self.a[k] += rhs.a[k];
        }
    }
}

impl Sub for Mat {
    type Output = Mat;
    #[inline]
    fn sub(mut self, rhs: Mat) -> Mat {
        self -= rhs;
        self
    }
}

impl SubAssign for Mat {
    #[inline]
    fn sub_assign(&mut self, rhs: Mat) {
        debug_assert_eq!(self.n, rhs.n);
        for k in 0..16 {
            self.a[k] -= rhs.a[k];
        }
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(mut self) -> Mat {
        for v in self.a.iter_mut() {
            *v = -*v;
        }
        self
    }
}

impl Mul for Mat {
    type Output = Mat;
    #[inline]
    fn mul(self, rhs: Mat) -> Mat {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Mat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self.a[i * 4 + k];
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * 4 + j] += x * rhs.a[k * 4 + j];
                }
            }
        }
        out
    }
}

impl Mul<C64> for Mat {
    type Output = Mat;
    fn mul(self, s: C64) -> Mat {
        self.scale(s)
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat{}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            write!(f, "  ")?;
            for j in 0..self.n {
                let v = self.a[i * 4 + j];
                write!(f, "{:+.6e}{:+.6e}i  ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
