//! K-surfaces of revolution in arc-length asymptotic coordinates, as
//! reference surfaces for the Toda pipeline.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use super::jacobi::{jacobi, JacobiKind};
use super::quad::elliptic_e_incomplete;
use crate::error::{Error, Result};
use crate::potentials::AngleKind;

fn real_part(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() > 1e-10 * z.norm().max(1.0) {
        return Err(Error::DomainError(format!("{what} is not real ({z})")));
    }
    Ok(z.re)
}

/// Profile parameters (u, v) of the surface of revolution at (x, y).
pub fn revolution_parameters(kind: AngleKind, x: f64, y: f64) -> Result<(f64, f64)> {
    let s = x - y;
    let i = C64::i();
    match kind {
        AngleKind::Pseud => Ok((x + y, 2.0 * s.exp().atan())),
        AngleKind::Hyper { b } => {
            let c = (1.0 + b * b).sqrt();
            let am = jacobi(JacobiKind::Am, C64::new(0.0, s / c), C64::new(0.0, b))?;
            Ok(((x + y) / c, real_part(-i * am, "v")?))
        }
        AngleKind::Conic { b } => {
            let c = (1.0 - b * b).sqrt();
            let am = jacobi(JacobiKind::Am, C64::new(0.0, s), C64::new(0.0, b / c))?;
            Ok(((x + y) / c, real_part(-i * am, "v")?))
        }
    }
}

/// f(u(x, y), v(x, y)) for the pseudosphere and the hyperboloid- and conic-type surfaces.
pub fn reference_k_surface(kind: AngleKind, x: f64, y: f64) -> Result<[f64; 3]> {
    let (u, v) = revolution_parameters(kind, x, y)?;
    let (su, cu) = u.sin_cos();
    match kind {
        AngleKind::Pseud => {
            if !(v > 0.0 && v < 2.0 * FRAC_PI_2) {
                return Err(Error::DomainError(format!("v = {v} leaves (0, π)")));
            }
            Ok([cu * v.sin(), su * v.sin(), v.cos() + (0.5 * v).tan().ln()])
        }
        AngleKind::Hyper { b } => {
            // ∫₀^v √(1 − b² sinh² t) dt = i·E(−iv, −b²)
            let e = C64::i() * elliptic_e_incomplete(C64::new(0.0, -v), C64::new(-b * b, 0.0))?;
            Ok([b * cu * v.cosh(), b * su * v.cosh(), real_part(e, "height")?])
        }
        AngleKind::Conic { b } => {
            // ∫₀^v √(1 − b² cosh² t) dt = i√(1 − b²)·E(−iv, −b²/(1 − b²))
            let c2 = 1.0 - b * b;
            let e = C64::new(0.0, c2.sqrt()) * elliptic_e_incomplete(C64::new(0.0, -v), C64::new(-b * b / c2, 0.0))?;
            Ok([b * cu * v.sinh(), b * su * v.sinh(), real_part(e, "height")?])
        }
    }
}

/// The dxdy coefficient F of I = dx² + 2F·dxdy + dy², in the Jacobi-function
/// form (independent of the angle-function code path).
pub fn reference_first_form(kind: AngleKind, x: f64, y: f64) -> Result<f64> {
    let s = x - y;
    match kind {
        AngleKind::Pseud => Ok(-1.0 + 2.0 / s.cosh().powi(2)),
        AngleKind::Hyper { b } => {
            let c2 = 1.0 + b * b;
            let dn = jacobi(JacobiKind::Dn, C64::new(0.0, s / c2.sqrt()), C64::new(0.0, b))?;
            real_part(C64::new(1.0, 0.0) - dn * dn * (2.0 / c2), "F")
        }
        AngleKind::Conic { b } => {
            let dn = jacobi(JacobiKind::Dn, C64::new(0.0, s), C64::new(0.0, b / (1.0 - b * b).sqrt()))?;
            real_part(C64::new(1.0, 0.0) - dn * dn * 2.0, "F")
        }
    }
}

/// ω_pseud written as 4·atan(e^{x−y}) − π.
pub fn omega_pseud_alt(x: f64, y: f64) -> f64 {
    4.0 * (x - y).exp().atan() - 2.0 * FRAC_PI_2
}
