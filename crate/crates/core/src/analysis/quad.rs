//! Gauss-Legendre quadrature and the incomplete elliptic integral E(φ, m).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn panels<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64, npan: usize, gl: &(Vec<f64>, Vec<f64>)) -> C64 {
    let h = (b - a) / npan as f64;
    let mut s = C64::new(0.0, 0.0);
    for p in 0..npan {
        let lo = a + p as f64 * h;
        for (x, w) in gl.0.iter().zip(&gl.1) {
            s += f(lo + 0.5 * h * (x + 1.0)) * (0.5 * h * w);
        }
    }
    s
}

/// Composite 12-point Gauss-Legendre with panel doubling until the relative
/// change drops below `tol`. The integrand is evaluated in increasing order of t.
pub fn integrate_complex<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let gl = gauss_legendre(12);
    let mut npan = 2;
    let mut prev = panels(&mut f, a, b, npan, &gl);
    for _ in 0..14 {
        npan *= 2;
        let cur = panels(&mut f, a, b, npan, &gl);
        if !(cur.re.is_finite() && cur.im.is_finite()) {
            return Err(Error::DomainError("integrand not finite on the path".into()));
        }
        if (cur - prev).norm() <= tol * cur.norm().max(1e-300) || (cur - prev).norm() < 1e-300 {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::IntegrationFailure("quadrature did not converge".into()))
}

pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate_complex(|t| C64::new(f(t), 0.0), a, b, tol).map(|z| z.re)
}

/// E(φ, m) = ∫₀^φ √(1 − m·sin²t) dt along the straight path from 0 to φ,
/// with the square-root branch continued from 1 at the origin.
pub fn elliptic_e_incomplete(phi: C64, m: C64) -> Result<C64> {
    if phi.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    // reject paths through a branch point of the integrand
    let probe = 2048;
    for j in 0..=probe {
        let t = phi * (j as f64 / probe as f64);
        let s = t.sin();
        if (C64::new(1.0, 0.0) - m * s * s).norm() < 1e-10 {
            return Err(Error::DomainError("integrand vanishes on the path".into()));
        }
    }
    let mut prev = C64::new(1.0, 0.0);
    let mut last_s = -1.0;
    let f = |s: f64| -> C64 {
        let t = phi * s;
        let sn = t.sin();
        let mut w = (C64::new(1.0, 0.0) - m * sn * sn).sqrt();
        if s < last_s {
            prev = C64::new(1.0, 0.0);
        }
        if (w - prev).norm() > (w + prev).norm() {
            w = -w;
        }
        prev = w;
        last_s = s;
        w * phi
    };
    integrate_complex(f, 0.0, 1.0, 1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((s - 2.0 / 23.0).abs() < 1e-14);
    }

    #[test]
    fn elliptic_e_values() {
        assert_eq!(elliptic_e_incomplete(C64::new(0.0, 0.0), C64::new(0.3, 0.0)).unwrap(), C64::new(0.0, 0.0));
        let e = elliptic_e_incomplete(C64::new(0.8, 0.0), C64::new(0.0, 0.0)).unwrap();
        assert!((e.re - 0.8).abs() < 1e-14);
        let e = elliptic_e_incomplete(C64::new(std::f64::consts::FRAC_PI_2, 0.0), C64::new(0.5, 0.0)).unwrap();
        assert!((e.re - 1.350_643_881_047_675_5).abs() < 1e-12);
    }
}
