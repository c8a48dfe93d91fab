//! Angle functions of the K-surfaces of revolution. Each is a function of
//! s = x − y alone, ω(x, y) = g(x − y), and solves ∂x∂yω = sin ω.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::jacobi::{ellip_k, sncndn};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum AngleKind {
    Pseud,
    Hyper { b: f64 },
    Conic { b: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleFunction {
    kind: AngleKind,
    /// |x − y| must stay below this for the closed form to be analytic.
    reach: f64,
}

const PSEUD_REACH: f64 = 20.0;

impl AngleFunction {
    pub fn new(kind: AngleKind) -> Result<Self> {
        let reach = match kind {
            AngleKind::Pseud => PSEUD_REACH,
            AngleKind::Hyper { b } => {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::InvalidParams(format!("hyper angle needs b > 0, got {b}")));
                }
                hyper_reach(b)
            }
            AngleKind::Conic { b } => {
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::InvalidParams(format!("conic angle needs 0 < b < 1, got {b}")));
                }
                let c = (1.0 - b * b).sqrt();
                // b·sd reaches 1 at the quarter period, where arcsin branches
                c * ellip_k(c * c)
            }
        };
        Ok(AngleFunction { kind, reach })
    }

    pub fn kind(&self) -> AngleKind {
        self.kind
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    /// g(s), analytically continued to complex s.
    pub fn profile(&self, s: C64) -> Result<C64> {
        if s.re.abs() >= self.reach || s.im.abs() >= self.reach {
            return Err(Error::DomainError(format!(
                "|x - y| = {:.4} exceeds the analyticity reach {:.4}",
                s.norm(),
                self.reach
            )));
        }
        let two = C64::new(2.0, 0.0);
        Ok(match self.kind {
            AngleKind::Pseud => two * s.tanh().asin(),
            AngleKind::Hyper { b } => {
                let c = (1.0 + b * b).sqrt();
                let t = sncndn(C64::i() * s / c, -b * b)?;
                two * (t.dn / c).asin()
            }
            AngleKind::Conic { b } => {
                let c = (1.0 - b * b).sqrt();
                let t = sncndn(s / c, c * c)?;
                C64::new(PI, 0.0) - two * (t.sn / t.dn * b).asin()
            }
        })
    }

    /// g′(s).
    pub fn profile_derivative(&self, s: C64) -> Result<C64> {
        self.profile(s)?;
        Ok(match self.kind {
            AngleKind::Pseud => C64::new(2.0, 0.0) / s.cosh(),
            AngleKind::Hyper { b } => {
                let c = (1.0 + b * b).sqrt();
                let t = sncndn(C64::i() * s / c, -b * b)?;
                C64::new(0.0, 2.0 * b / c) * t.sn
            }
            AngleKind::Conic { b } => {
                let c = (1.0 - b * b).sqrt();
                let t = sncndn(s / c, c * c)?;
                -C64::new(2.0 * b / c, 0.0) / t.dn
            }
        })
    }

    /// ω(x, y) with partials (∂xω, ∂yω).
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, f64, f64)> {
        let s = C64::new(x - y, 0.0);
        let w = self.profile(s)?.re;
        let d = self.profile_derivative(s)?.re;
        Ok((w, d, -d))
    }

    pub fn omega(&self, x: C64, y: C64) -> Result<C64> {
        self.profile(x - y)
    }
}

/// Smallest s > 0 where dn(is/c, ib)/c reaches 1.
fn hyper_reach(b: f64) -> f64 {
    let c = (1.0 + b * b).sqrt();
    let f = |s: f64| -> f64 {
        match sncndn(C64::new(0.0, s / c), -b * b) {
            Ok(t) => t.dn.re / c - 1.0,
            Err(_) => 1.0,
        }
    };
    let (mut lo, mut hi) = (0.0, 0.05);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 1.5;
        if hi > PSEUD_REACH {
            return PSEUD_REACH;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Public entry point returning ω and its first partials.
pub fn angle_function(kind: AngleKind, x: f64, y: f64) -> Result<(f64, f64, f64)> {
    AngleFunction::new(kind)?.eval(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values() {
        let (w, _, _) = angle_function(AngleKind::Pseud, 0.0, 0.0).unwrap();
        assert_eq!(w, 0.0);
        let (w, _, _) = angle_function(AngleKind::Conic { b: 0.5 }, 0.0, 0.0).unwrap();
        assert!((w - PI).abs() < 1e-15);
    }

    #[test]
    fn partials_match_central_differences() {
        let h = 1e-5;
        for kind in [AngleKind::Pseud, AngleKind::Hyper { b: 0.5 }, AngleKind::Conic { b: 0.5 }] {
            let f = AngleFunction::new(kind).unwrap();
            for (x, y) in [(0.1, -0.05), (0.2, 0.15), (-0.1, 0.05)] {
                let (_, wx, wy) = f.eval(x, y).unwrap();
                let fx = (f.eval(x + h, y).unwrap().0 - f.eval(x - h, y).unwrap().0) / (2.0 * h);
                let fy = (f.eval(x, y + h).unwrap().0 - f.eval(x, y - h).unwrap().0) / (2.0 * h);
                assert!((wx - fx).abs() < 1e-7, "{kind:?}: {wx} vs {fx}");
                assert!((wy - fy).abs() < 1e-7, "{kind:?}: {wy} vs {fy}");
            }
        }
    }

    #[test]
    fn out_of_reach_is_rejected() {
        let f = AngleFunction::new(AngleKind::Hyper { b: 0.5 }).unwrap();
        assert!(matches!(f.eval(f.reach() + 0.01, 0.0), Err(Error::DomainError(_))));
        assert!(AngleFunction::new(AngleKind::Conic { b: 1.2 }).is_err());
    }
}
