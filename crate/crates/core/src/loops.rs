//! Banded Laurent-series loops A_λ = Σ_k A_k λ^k with twist and reality checks.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::algebra::{GroupSpec, Involution, Mat};
use crate::error::{Error, Result};

pub const DEFAULT_BAND: i32 = 32;
pub const CIRCLE_SAMPLES: usize = 16;

/// The 16 sample points on S¹ used by all sampled checks.
pub fn circle_samples() -> Vec<C64> {
    (0..CIRCLE_SAMPLES)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.137) / CIRCLE_SAMPLES as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum RealityKind {
    /// ν(A_{λ̄}) = A_λ
    FirstKind(Involution),
    /// ν(A_{1/λ̄}) = A_λ
    SecondKind(Involution),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedLoop {
    group: GroupSpec,
    n: i32,
    lo: i32,
    coeffs: Vec<Mat>,
    tail_norm: f64,
}

impl TwistedLoop {
    /// Builds a loop from coefficients starting at power `lo`, clipping to the working band `n`.
    pub fn new(group: GroupSpec, n: i32, lo: i32, coeffs: Vec<Mat>) -> Self {
        let d = group.dim();
        assert!(coeffs.iter().all(|c| c.dim() == d), "coefficient size mismatch");
        let mut l = TwistedLoop { group, n, lo, coeffs, tail_norm: 0.0 };
        l.normalize_band();
        l
    }

    pub fn identity(group: GroupSpec, n: i32) -> Self {
        Self::constant(group, n, Mat::identity(group.dim()))
    }

    pub fn zero(group: GroupSpec, n: i32) -> Self {
        Self::constant(group, n, Mat::zeros(group.dim()))
    }

    pub fn constant(group: GroupSpec, n: i32, m: Mat) -> Self {
        TwistedLoop { group, n, lo: 0, coeffs: vec![m], tail_norm: 0.0 }
    }

    pub fn monomial(group: GroupSpec, n: i32, k: i32, m: Mat) -> Self {
        Self::new(group, n, k, vec![m])
    }

    fn normalize_band(&mut self) {
        let d = self.group.dim();
        if self.lo > 0 {
            let mut c = vec![Mat::zeros(d); self.lo as usize];
            c.append(&mut self.coeffs);
            self.coeffs = c;
            self.lo = 0;
        }
        if self.hi() < 0 {
            let extra = (-self.hi()) as usize;
            self.coeffs.extend(std::iter::repeat(Mat::zeros(d)).take(extra));
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Mat::zeros(d));
            self.lo = 0;
        }
        // clip to the working band
        let n = self.n;
        let mut dropped = 0.0;
        if self.lo < -n {
            let cut = (-n - self.lo) as usize;
            dropped += self.coeffs[..cut].iter().map(|c| c.norm_fro()).sum::<f64>();
            self.coeffs.drain(..cut);
            self.lo = -n;
        }
        if self.hi() > n {
            let keep = (n - self.lo + 1) as usize;
            dropped += self.coeffs[keep..].iter().map(|c| c.norm_fro()).sum::<f64>();
            self.coeffs.truncate(keep);
        }
        self.tail_norm += dropped;
    }

    #[inline]
    pub fn group(&self) -> GroupSpec {
        self.group
    }
    #[inline]
    pub fn dim(&self) -> usize {
        self.group.dim()
    }
    #[inline]
    pub fn lo(&self) -> i32 {
        self.lo
    }
    #[inline]
    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }
    /// Working band N: coefficients live in k ∈ [−N, N].
    #[inline]
    pub fn working_band(&self) -> i32 {
        self.n
    }
    #[inline]
    pub fn tail_norm(&self) -> f64 {
        self.tail_norm
    }
    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn with_tail_norm(mut self, t: f64) -> Self {
        self.tail_norm = t;
        self
    }

    pub fn coeff(&self, k: i32) -> Mat {
        if k < self.lo || k > self.hi() {
            Mat::zeros(self.dim())
        } else {
            self.coeffs[(k - self.lo) as usize]
        }
    }

    pub fn set_coeff(&mut self, k: i32, m: Mat) {
        assert!(k.abs() <= self.n, "power {k} outside working band");
        let d = self.dim();
        while k < self.lo {
            self.coeffs.insert(0, Mat::zeros(d));
            self.lo -= 1;
        }
        while k > self.hi() {
            self.coeffs.push(Mat::zeros(d));
        }
        self.coeffs[(k - self.lo) as usize] = m;
    }

    /// Changes the working band, clipping if it shrinks.
    pub fn with_working_band(mut self, n: i32) -> Self {
        self.n = n;
        self.normalize_band();
        self
    }

    /// Drops exactly-zero edge coefficients (keeping k = 0 in range).
    pub fn trimmed(mut self) -> Self {
        while self.lo < 0 && self.coeffs[0].max_abs() == 0.0 {
            self.coeffs.remove(0);
            self.lo += 1;
        }
        while self.hi() > 0 && self.coeffs.last().map_or(false, |c| c.max_abs() == 0.0) {
            self.coeffs.pop();
        }
        self
    }

    pub fn is_minus(&self) -> bool {
        self.hi() <= 0 || (1..=self.hi()).all(|k| self.coeff(k).max_abs() == 0.0)
    }

    pub fn is_plus(&self) -> bool {
        self.lo >= 0 || (self.lo..0).all(|k| self.coeff(k).max_abs() == 0.0)
    }

    /// ℓ¹ norm Σ‖A_k‖ with the Frobenius matrix norm.
    pub fn norm_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_fro()).sum()
    }

    pub fn eval(&self, mu: C64) -> Result<Mat> {
        if mu.norm() == 0.0 {
            return Err(Error::EvalAtZero);
        }
        let d = self.dim();
        let mut pos = Mat::zeros(d);
        for k in (0..=self.hi().max(0)).rev() {
            pos = pos.scale(mu) + self.coeff(k);
        }
        let mut neg = Mat::zeros(d);
        let inv = mu.inv();
        for k in self.lo..=-1 {
            neg = (neg + self.coeff(k)).scale(inv);
        }
        Ok(pos + neg)
    }

    pub fn map_coeffs<F: Fn(i32, &Mat) -> Mat>(&self, f: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| f(self.lo + i as i32, c))
            .collect();
        TwistedLoop { group: self.group, n: self.n, lo: self.lo, coeffs, tail_norm: self.tail_norm }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.map_coeffs(|_, c| c.scale(s));
        out.tail_norm *= s.norm();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let coeffs = (lo..=hi)
            .map(|k| self.coeff(k) + other.coeff(k).scale_re(sign))
            .collect();
        TwistedLoop::new(self.group, self.n.max(other.n), lo, coeffs)
            .with_tail_norm(self.tail_norm + other.tail_norm)
    }

    pub fn left_mul(&self, m: &Mat) -> Self {
        let mut out = self.map_coeffs(|_, c| *m * *c);
        out.tail_norm *= m.norm_fro();
        out
    }

    pub fn right_mul(&self, m: &Mat) -> Self {
        let mut out = self.map_coeffs(|_, c| *c * *m);
        out.tail_norm *= m.norm_fro();
        out
    }

    /// Product clipped to the larger working band; discarded mass goes to `tail_norm`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.group, other.group, "loop groups differ");
        let n = self.n.max(other.n);
        let d = self.dim();
        let lo = (self.lo + other.lo).max(-n);
        let hi = (self.hi() + other.hi()).min(n);
        let mut out = vec![Mat::zeros(d); (hi - lo + 1).max(1) as usize];
        let na: Vec<f64> = self.coeffs.iter().map(|c| c.norm_fro()).collect();
        let nb: Vec<f64> = other.coeffs.iter().map(|c| c.norm_fro()).collect();
        let mut dropped = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            if na[i] == 0.0 {
                continue;
            }
            let ki = self.lo + i as i32;
            for (j, b) in other.coeffs.iter().enumerate() {
                if nb[j] == 0.0 {
                    continue;
                }
                let k = ki + other.lo + j as i32;
                if k < lo || k > hi {
                    dropped += na[i] * nb[j];
                    continue;
                }
                out[(k - lo) as usize] += *a * *b;
            }
        }
        let sa: f64 = na.iter().sum();
        let sb: f64 = nb.iter().sum();
        let tail = dropped + self.tail_norm * sb + sa * other.tail_norm + self.tail_norm * other.tail_norm;
        let mut l = TwistedLoop { group: self.group, n, lo: lo.min(0), coeffs: out, tail_norm: tail };
        if lo > 0 {
            l.lo = lo;
            l.normalize_band();
        }
        if hi < 0 {
            l.normalize_band();
        }
        l
    }

    /// λ·∂_λ: coefficient k is multiplied by k.
    pub fn lambda_derivative(&self) -> Self {
        let mut out = self.map_coeffs(|k, c| c.scale_re(k as f64));
        out.tail_norm *= self.n as f64;
        out
    }

    /// λ ↦ 1/λ, i.e. k ↦ −k.
    pub fn reflect(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        TwistedLoop { group: self.group, n: self.n, lo: -self.hi(), coeffs, tail_norm: self.tail_norm }
    }

    /// λ ↦ c·λ, i.e. A_k ↦ c^k A_k.
    pub fn rescale(&self, c: C64) -> Self {
        self.map_coeffs(|k, m| m.scale(c.powi(k)))
    }

    /// Coefficients restricted to k ∈ [lo, hi].
    pub fn project(&self, lo: i32, hi: i32) -> Self {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi());
        if lo > hi {
            return TwistedLoop::zero(self.group, self.n);
        }
        let coeffs = (lo..=hi).map(|k| self.coeff(k)).collect();
        TwistedLoop::new(self.group, self.n, lo, coeffs)
    }

    /// Inverse loop. One-sided loops use the exact power-series recursion,
    /// two-sided loops use Newton iteration X ← X(2·Id − L·X).
    pub fn inverse(&self) -> Result<Self> {
        let inv = if self.is_plus() {
            self.series_inverse(false)?
        } else if self.is_minus() {
            self.series_inverse(true)?
        } else {
            self.newton_inverse()?
        };
        let id = Mat::identity(self.dim());
        for mu in circle_samples() {
            let p = self.eval(mu)? * inv.eval(mu)?;
            if !(p.dist(&id) < 1e-9_f64.max(10.0 * (self.tail_norm + inv.tail_norm))) {
                return Err(Error::LoopNotInvertible);
            }
        }
        Ok(inv)
    }

    fn series_inverse(&self, minus: bool) -> Result<Self> {
        let src = if minus { self.reflect() } else { self.clone() };
        let n = self.n as usize;
        let a0inv = src.coeff(0).inverse().map_err(|_| Error::LoopNotInvertible)?;
        let mut x: Vec<Mat> = Vec::with_capacity(n + 1);
        x.push(a0inv);
        let top = src.hi().max(0) as usize;
        for m in 1..=n {
            let mut s = Mat::zeros(self.dim());
            for j in 1..=m.min(top) {
                s += src.coeff(j as i32) * x[m - j];
            }
            x.push(-(a0inv * s));
        }
        let out = TwistedLoop::new(self.group, self.n, 0, x);
        // truncation estimate: the last two coefficients bound the discarded geometric tail
        let t = out.coeff(self.n).norm_fro() + out.coeff(self.n - 1).norm_fro();
        let mass = out.norm_l1();
        let out = out.with_tail_norm(t + self.tail_norm * mass * mass);
        Ok(if minus { out.reflect() } else { out })
    }

    fn newton_inverse(&self) -> Result<Self> {
        let d = self.dim();
        let id = TwistedLoop::identity(self.group, self.n);
        let seed = self.eval(C64::new(1.0, 0.0))?.inverse().map_err(|_| Error::LoopNotInvertible)?;
        let mut x = TwistedLoop::constant(self.group, self.n, seed);
        if let Some(r) = self.newton_from(&mut x, &id) {
            if r < 1e-12 {
                return Ok(x);
            }
        }
        let mut x = self.sampled_inverse(d)?;
        match self.newton_from(&mut x, &id) {
            Some(r) if r < 1e-10 => Ok(x),
            _ => Err(Error::LoopNotInvertible),
        }
    }

    fn newton_from(&self, x: &mut Self, id: &Self) -> Option<f64> {
        let mut prev = f64::INFINITY;
        for _ in 0..60 {
            let r = id.sub(&self.mul(x));
            let rn = r.norm_l1();
            if !rn.is_finite() || rn > 2.0 * prev.min(1e3) {
                return None;
            }
            if rn < 1e-13 || rn >= prev {
                return Some(rn.min(prev));
            }
            prev = rn;
            *x = x.add(&x.mul(&r)).with_tail_norm(0.0);
        }
        Some(prev)
    }

    fn sampled_inverse(&self, d: usize) -> Result<Self> {
        let n = self.n;
        let m = (4 * n + 8) as usize;
        let mut coeffs = vec![Mat::zeros(d); (2 * n + 1) as usize];
        for j in 0..m {
            let mu = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            let v = self.eval(mu)?.inverse().map_err(|_| Error::LoopNotInvertible)?;
            for k in -n..=n {
                coeffs[(k + n) as usize] += v.scale(mu.powi(-k) / m as f64);
            }
        }
        Ok(TwistedLoop::new(self.group, n, -n, coeffs))
    }

    /// Group exponential of a loop-algebra element.
    pub fn exp(x: &Self) -> Self {
        let d = x.dim();
        let nonzero: Vec<i32> = (x.lo..=x.hi()).filter(|&k| x.coeff(k).max_abs() > 0.0).collect();
        if nonzero.is_empty() {
            return TwistedLoop::identity(x.group, x.n);
        }
        if nonzero.len() == 1 && nonzero[0] != 0 {
            // exp(M λ^p) = Σ M^j λ^{jp} / j!
            let p = nonzero[0];
            let m = x.coeff(p);
            let jmax = (x.n / p.abs()) as usize;
            let mut out = TwistedLoop::identity(x.group, x.n);
            let mut term = Mat::identity(d);
            for j in 1..=jmax {
                term = (term * m).scale_re(1.0 / j as f64);
                out.set_coeff(j as i32 * p, term);
            }
            let next = (term * m).norm_fro() / (jmax as f64 + 1.0);
            out.tail_norm = next * 2.0;
            return out;
        }
        let norm = x.norm_l1();
        let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let y = x.scale(C64::new(0.5f64.powi(s), 0.0));
        let mut term = TwistedLoop::identity(x.group, x.n);
        let mut sum = term.clone();
        for j in 1..=24 {
            term = term.mul(&y).scale(C64::new(1.0 / j as f64, 0.0));
            sum = sum.add(&term);
            if term.norm_l1() < 1e-17 {
                break;
            }
        }
        for _ in 0..s {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// max over S¹ samples of ‖σ(A_λ) − A_{−λ}‖.
    pub fn twist_residual(&self, sigma: &Involution) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for mu in circle_samples() {
            let a = sigma.apply(&self.eval(mu)?)?;
            let b = self.eval(-mu)?;
            worst = worst.max(a.dist(&b));
        }
        Ok(worst)
    }

    pub fn reality_residual(&self, kind: &RealityKind) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for mu in circle_samples() {
            let (nu, arg) = match kind {
                RealityKind::FirstKind(nu) => (nu, mu.conj()),
                RealityKind::SecondKind(nu) => (nu, mu.conj().inv()),
            };
            let a = nu.apply(&self.eval(arg)?)?;
            worst = worst.max(a.dist(&self.eval(mu)?));
        }
        Ok(worst)
    }

    /// Little-endian record: group tag, N, lo, hi, tail, then coefficients (re, im) row-major.
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        out.push(match self.group {
            GroupSpec::SL2C => 0u8,
            GroupSpec::SL4C => 1,
            GroupSpec::SP2C => 2,
        });
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.lo.to_le_bytes());
        out.extend_from_slice(&self.hi().to_le_bytes());
        out.extend_from_slice(&self.tail_norm.to_le_bytes());
        let d = self.dim();
        for c in &self.coeffs {
            for i in 0..d {
                for j in 0..d {
                    out.extend_from_slice(&c[(i, j)].re.to_le_bytes());
                    out.extend_from_slice(&c[(i, j)].im.to_le_bytes());
                }
            }
        }
    }

    pub fn read_bytes(buf: &[u8], pos: &mut usize) -> Result<Self> {
        fn take<'a>(buf: &'a [u8], pos: &mut usize, k: usize) -> Result<&'a [u8]> {
            let s = buf
                .get(*pos..*pos + k)
                .ok_or_else(|| Error::Format("truncated loop record".into()))?;
            *pos += k;
            Ok(s)
        }
        let group = match take(buf, pos, 1)?[0] {
            0 => GroupSpec::SL2C,
            1 => GroupSpec::SL4C,
            2 => GroupSpec::SP2C,
            t => return Err(Error::Format(format!("unknown group tag {t}"))),
        };
        let rd_i32 = |pos: &mut usize| -> Result<i32> {
            Ok(i32::from_le_bytes(take(buf, pos, 4)?.try_into().unwrap()))
        };
        let n = rd_i32(pos)?;
        let lo = rd_i32(pos)?;
        let hi = rd_i32(pos)?;
        let rd_f64 = |pos: &mut usize| -> Result<f64> {
            Ok(f64::from_le_bytes(take(buf, pos, 8)?.try_into().unwrap()))
        };
        let tail = rd_f64(pos)?;
        if lo > 0 || hi < 0 || lo < -n || hi > n {
            return Err(Error::Format(format!("invalid band [{lo}, {hi}] for N = {n}")));
        }
        let d = group.dim();
        let mut coeffs = Vec::with_capacity((hi - lo + 1) as usize);
        for _ in lo..=hi {
            let mut m = Mat::zeros(d);
            for i in 0..d {
                for j in 0..d {
                    let re = rd_f64(pos)?;
                    let im = rd_f64(pos)?;
                    m[(i, j)] = C64::new(re, im);
                }
            }
            coeffs.push(m);
        }
        Ok(TwistedLoop { group, n, lo, coeffs, tail_norm: tail })
    }
}

pub fn loop_eval(l: &TwistedLoop, mu: C64) -> Result<Mat> {
    l.eval(mu)
}

pub fn loop_mul(a: &TwistedLoop, b: &TwistedLoop) -> TwistedLoop {
    a.mul(b)
}

pub fn loop_inverse(l: &TwistedLoop) -> Result<TwistedLoop> {
    l.inverse()
}

pub fn loop_lambda_derivative(l: &TwistedLoop) -> TwistedLoop {
    l.lambda_derivative()
}

pub fn check_twist(l: &TwistedLoop, sigma: &Involution) -> Result<f64> {
    l.twist_residual(sigma)
}

pub fn check_reality(l: &TwistedLoop, kind: &RealityKind) -> Result<f64> {
    l.reality_residual(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c64, sigma1};

    fn cyl(x: f64, y: f64, n: i32) -> TwistedLoop {
        let a = TwistedLoop::exp(&TwistedLoop::monomial(GroupSpec::SL2C, n, -1, sigma1().scale_re(x)));
        let b = TwistedLoop::exp(&TwistedLoop::monomial(GroupSpec::SL2C, n, 1, sigma1().scale_re(-y)));
        a.mul(&b)
    }

    #[test]
    fn eval_constant_and_cancellation() {
        let id = TwistedLoop::identity(GroupSpec::SL2C, 8);
        assert!(id.eval(c64(2.5, 0.0)).unwrap().dist(&Mat::identity(2)) < 1e-16);
        let s = sigma1().scale_re(0.4);
        let l = TwistedLoop::new(GroupSpec::SL2C, 8, -1, vec![s, Mat::zeros(2), -s]);
        assert!(l.eval(c64(1.0, 0.0)).unwrap().max_abs() < 1e-16);
        assert_eq!(l.eval(c64(0.0, 0.0)), Err(Error::EvalAtZero));
    }

    #[test]
    fn cylinder_closed_form() {
        let l = cyl(0.3, 0.1, 32);
        let v = l.eval(c64(1.0, 0.0)).unwrap();
        let e = Mat::from_real_rows(&[[0.2f64.cosh(), 0.2f64.sinh()], [0.2f64.sinh(), 0.2f64.cosh()]]);
        assert!(v.dist(&e) < 1e-12);
        let th: f64 = 0.5;
        let w = 0.3 / th - th * 0.1;
        let v = l.eval(c64(th, 0.0)).unwrap();
        assert!(v.dist(&Mat::from_real_rows(&[[w.cosh(), w.sinh()], [w.sinh(), w.cosh()]])) < 1e-12);
    }

    #[test]
    fn lambda_derivative_of_cylinder() {
        let (x, y) = (0.3, 0.1);
        let d = cyl(x, y, 32).lambda_derivative().eval(c64(1.0, 0.0)).unwrap();
        let e = (sigma1().scale_re(x - y)).exp();
        let expect = (sigma1() * e).scale_re(-(x + y));
        assert!(d.dist(&expect) < 1e-10);
        let m = TwistedLoop::monomial(GroupSpec::SL2C, 4, -1, sigma1());
        assert_eq!(m.lambda_derivative().coeff(-1), -sigma1());
    }

    #[test]
    fn inverse_of_two_sided_loop() {
        let l = cyl(0.4, 0.3, 32);
        let inv = l.inverse().unwrap();
        let p = l.mul(&inv);
        for mu in circle_samples() {
            assert!(p.eval(mu).unwrap().dist(&Mat::identity(2)) < 1e-10);
        }
    }

    #[test]
    fn byte_round_trip() {
        let l = cyl(0.2, 0.5, 16);
        let mut buf = Vec::new();
        l.write_bytes(&mut buf);
        let mut pos = 0;
        let back = TwistedLoop::read_bytes(&buf, &mut pos).unwrap();
        assert_eq!(pos, buf.len());
        assert_eq!(back, l);
    }
}
