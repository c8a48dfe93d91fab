//! Jacobi elliptic functions am, sn, cn, dn, sd for complex argument and
//! real parameter m = k² (real or purely imaginary modulus).
//!
//! The core is the descending Landen (AGM) scheme for real argument and
//! 0 ≤ m ≤ 1. Complex arguments use the addition theorem together with Jacobi's
//! imaginary transformation; m < 0 uses the negative-parameter transformation
//! and m > 1 the reciprocal-modulus transformation.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JacobiKind {
    Am,
    Sn,
    Cn,
    Dn,
    Sd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnCnDn {
    pub sn: C64,
    pub cn: C64,
    pub dn: C64,
}

const POLE_TOL: f64 = 1e-13;

/// Complete elliptic integral of the first kind for m < 1.
pub fn ellip_k(m: f64) -> f64 {
    assert!(m < 1.0, "K(m) diverges at m = 1");
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    for _ in 0..60 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    PI / (2.0 * a)
}

/// (sn, cn, dn, am) for real u and 0 ≤ m ≤ 1.
fn real_core(u: f64, m: f64) -> (f64, f64, f64, f64) {
    if m <= 0.0 {
        return (u.sin(), u.cos(), 1.0, u);
    }
    if m >= 1.0 {
        let t = u.tanh();
        let s = 1.0 / u.cosh();
        return (t, s, s, t.asin());
    }
    let mut a = [0.0f64; 32];
    let mut c = [0.0f64; 32];
    a[0] = 1.0;
    c[0] = m.sqrt();
    let mut b = (1.0 - m).sqrt();
    let mut nsteps = 0;
    for i in 0..31 {
        if c[i].abs() <= 1e-16 * a[i] {
            break;
        }
        a[i + 1] = 0.5 * (a[i] + b);
        c[i + 1] = 0.5 * (a[i] - b);
        b = (a[i] * b).sqrt();
        nsteps = i + 1;
    }
    let mut phi = 2f64.powi(nsteps as i32) * a[nsteps] * u;
    let mut phi_prev = phi;
    for i in (1..=nsteps).rev() {
        phi_prev = phi;
        phi = 0.5 * (phi + (c[i] * phi.sin() / a[i]).asin());
    }
    let (sn, cn) = phi.sin_cos();
    let dn = if nsteps == 0 { 1.0 } else { cn / (phi_prev - phi).cos() };
    (sn, cn, dn, phi)
}

fn sncndn_unit_interval(u: C64, m: f64) -> Result<SnCnDn> {
    let (s, c, d, _) = real_core(u.re, m);
    if u.im == 0.0 {
        return Ok(SnCnDn { sn: C64::new(s, 0.0), cn: C64::new(c, 0.0), dn: C64::new(d, 0.0) });
    }
    let (s1, c1, d1, _) = real_core(u.im, 1.0 - m);
    let den = c1 * c1 + m * s * s * s1 * s1;
    if den.abs() < POLE_TOL {
        return Err(Error::PoleProximity);
    }
    Ok(SnCnDn {
        sn: C64::new(s * d1, c * d * s1 * c1) / den,
        cn: C64::new(c * c1, -s * d * s1 * d1) / den,
        dn: C64::new(d * c1 * d1, -m * s * c * s1) / den,
    })
}

/// sn, cn, dn for complex u and real parameter m.
pub fn sncndn(u: C64, m: f64) -> Result<SnCnDn> {
    if (0.0..=1.0).contains(&m) {
        sncndn_unit_interval(u, m)
    } else if m < 0.0 {
        // sn(u|m) = sd(v|μ)/r, cn = cd(v|μ), dn = nd(v|μ), v = r·u, r = √(1−m)
        let r = (1.0 - m).sqrt();
        let mu = -m / (1.0 - m);
        let t = sncndn_unit_interval(u * r, mu)?;
        if t.dn.norm() < POLE_TOL {
            return Err(Error::PoleProximity);
        }
        Ok(SnCnDn { sn: t.sn / (t.dn * r), cn: t.cn / t.dn, dn: t.dn.inv() })
    } else {
        // sn(u|m) = sn(k u|1/m)/k, cn = dn(k u|1/m), dn = cn(k u|1/m)
        let k = m.sqrt();
        let t = sncndn_unit_interval(u * k, 1.0 / m)?;
        Ok(SnCnDn { sn: t.sn / k, cn: t.dn, dn: t.cn })
    }
}

/// Amplitude for real u (continuous, monotone for m < 1).
fn am_real(u: f64, m: f64) -> f64 {
    if (0.0..=1.0).contains(&m) {
        return real_core(u, m).3;
    }
    if m > 1.0 {
        let t = sncndn(C64::new(u, 0.0), m).expect("real argument has no poles");
        return t.sn.re.atan2(t.cn.re);
    }
    let kk = ellip_k(m);
    let j = (u / (2.0 * kk)).round();
    let t = sncndn(C64::new(u - 2.0 * kk * j, 0.0), m).expect("real argument has no poles");
    t.sn.re.atan2(t.cn.re) + j * PI
}

fn parameter(k: C64) -> Result<f64> {
    let m = k * k;
    if m.im.abs() > 1e-14 * m.norm().max(1.0) {
        return Err(Error::DomainError(format!(
            "modulus {k} has non-real square; only real or imaginary moduli are supported"
        )));
    }
    Ok(m.re)
}

/// Jacobi function of the given kind with modulus k (parameter m = k²).
pub fn jacobi(kind: JacobiKind, u: C64, k: C64) -> Result<C64> {
    let m = parameter(k)?;
    match kind {
        JacobiKind::Am => {
            let base = am_real(u.re, m);
            if u.im == 0.0 {
                return Ok(C64::new(base, 0.0));
            }
            let t = sncndn(u, m)?;
            let z = (t.cn + C64::i() * t.sn) * C64::from_polar(1.0, -base);
            Ok(C64::new(base, 0.0) - C64::i() * z.ln())
        }
        JacobiKind::Sn => Ok(sncndn(u, m)?.sn),
        JacobiKind::Cn => Ok(sncndn(u, m)?.cn),
        JacobiKind::Dn => Ok(sncndn(u, m)?.dn),
        JacobiKind::Sd => {
            let t = sncndn(u, m)?;
            if t.dn.norm() < POLE_TOL {
                return Err(Error::PoleProximity);
            }
            Ok(t.sn / t.dn)
        }
    }
}

/// Maclaurin series of (sn, cn, dn) from the defining ODE system; slow
/// reference used to validate the fast path for |u| below the nearest pole.
pub fn series_sncndn(u: C64, m: C64, terms: usize) -> SnCnDn {
    let mut s = vec![C64::new(0.0, 0.0); terms + 1];
    let mut c = s.clone();
    let mut d = s.clone();
    c[0] = C64::new(1.0, 0.0);
    d[0] = C64::new(1.0, 0.0);
    for n in 0..terms {
        let conv = |a: &[C64], b: &[C64]| -> C64 { (0..=n).map(|j| a[j] * b[n - j]).sum() };
        let nf = (n + 1) as f64;
        s[n + 1] = conv(&c, &d) / nf;
        c[n + 1] = -conv(&s, &d) / nf;
        d[n + 1] = -m * conv(&s, &c) / nf;
    }
    let horner = |a: &[C64]| a.iter().rev().fold(C64::new(0.0, 0.0), |acc, x| acc * u + x);
    SnCnDn { sn: horner(&s), cn: horner(&c), dn: horner(&d) }
}
