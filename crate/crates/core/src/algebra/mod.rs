//! Matrix groups, involutions and the symmetric-space splitting 𝔤 = 𝔥 ⊕ 𝔪.

mod mat;

pub use mat::{Mat, MAX_DIM};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MEMBERSHIP_TOL: f64 = 1e-9;
pub const INVOLUTIVITY_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GroupSpec {
    SL2C,
    SL4C,
    SP2C,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    DetOne,
    DetOneAndSymplectic,
}

impl GroupSpec {
    pub fn dim(self) -> usize {
        match self {
            GroupSpec::SL2C => 2,
            GroupSpec::SL4C | GroupSpec::SP2C => 4,
        }
    }

    pub fn constraint(self) -> Constraint {
        match self {
            GroupSpec::SP2C => Constraint::DetOneAndSymplectic,
            _ => Constraint::DetOne,
        }
    }

    /// J = [[0, I₂], [−I₂, 0]] for Sp(2,ℂ); `None` otherwise.
    pub fn symplectic_form(self) -> Option<Mat> {
        match self {
            GroupSpec::SP2C => Some(Mat::from_real_rows(&[
                [0.0, 0.0, 1.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [-1.0, 0.0, 0.0, 0.0],
                [0.0, -1.0, 0.0, 0.0],
            ])),
            _ => None,
        }
    }

    /// Residual of the Lie-algebra constraints: trace, and XᵀJ + JX for Sp(2,ℂ).
    pub fn algebra_residual(self, x: &Mat) -> f64 {
        let mut r = x.trace().norm();
        if let Some(j) = self.symplectic_form() {
            r = r.max((x.transpose() * j + j * *x).norm_fro());
        }
        r
    }

    pub fn symplectic_residual(self, m: &Mat) -> Option<f64> {
        self.symplectic_form()
            .map(|j| (m.transpose() * j * *m - j).norm_fro())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Involution {
    /// A ↦ K·A·K⁻¹ with K·K = ±Id.
    ConjugateBy(Mat),
    /// A ↦ Ā.
    EntrywiseConjugate,
    /// A ↦ (Āᵀ)⁻¹.
    InverseConjugateTranspose,
    /// Applied left to right.
    Compose(Vec<Involution>),
}

impl Involution {
    pub fn is_holomorphic(&self) -> bool {
        match self {
            Involution::ConjugateBy(_) => true,
            Involution::EntrywiseConjugate | Involution::InverseConjugateTranspose => false,
            Involution::Compose(parts) => parts.iter().filter(|p| !p.is_holomorphic()).count() % 2 == 0,
        }
    }

    fn conjugate(k: &Mat, m: &Mat) -> Mat {
        // K·K = s·Id, so K⁻¹ = K/s.
        let s = (*k * *k)[(0, 0)];
        (*k * *m * *k).scale(s.inv())
    }

    /// Group-level action.
    pub fn apply(&self, m: &Mat) -> Result<Mat> {
        match self {
            Involution::ConjugateBy(k) => Ok(Self::conjugate(k, m)),
            Involution::EntrywiseConjugate => Ok(m.conj()),
            Involution::InverseConjugateTranspose => m.adjoint().inverse(),
            Involution::Compose(parts) => {
                let mut out = *m;
                for p in parts {
                    out = p.apply(&out)?;
                }
                Ok(out)
            }
        }
    }

    /// Differential at the identity, acting on Lie-algebra elements.
    pub fn apply_diff(&self, x: &Mat) -> Mat {
        match self {
            Involution::ConjugateBy(k) => Self::conjugate(k, x),
            Involution::EntrywiseConjugate => x.conj(),
            Involution::InverseConjugateTranspose => -x.adjoint(),
            Involution::Compose(parts) => parts.iter().fold(*x, |acc, p| p.apply_diff(&acc)),
        }
    }

    /// Checks K·K = ±Id for every conjugation factor.
    pub fn validate(&self) -> Result<()> {
        match self {
            Involution::ConjugateBy(k) => {
                let kk = *k * *k;
                let n = k.dim();
                let id = Mat::identity(n);
                if kk.dist(&id) < 1e-12 || kk.dist(&(-id)) < 1e-12 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams("conjugating matrix must square to ±Id".into()))
                }
            }
            Involution::Compose(parts) => parts.iter().try_for_each(|p| p.validate()),
            _ => Ok(()),
        }
    }
}

pub fn apply_involution(inv: &Involution, m: &Mat) -> Result<Mat> {
    inv.apply(m)
}

/// diag(−1, 1)
pub fn i11() -> Mat {
    Mat::real_diag(&[-1.0, 1.0])
}

/// diag(−1, −1, 1, 1)
pub fn i22() -> Mat {
    Mat::real_diag(&[-1.0, -1.0, 1.0, 1.0])
}

/// diag(−1, 1, −1, 1)
pub fn k11() -> Mat {
    Mat::real_diag(&[-1.0, 1.0, -1.0, 1.0])
}

pub fn sigma1() -> Mat {
    Mat::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
}

pub fn sigma3() -> Mat {
    Mat::real_diag(&[1.0, -1.0])
}

/// E = [[0, −1], [1, 0]]
pub fn e_rot() -> Mat {
    Mat::from_real_rows(&[[0.0, -1.0], [1.0, 0.0]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSpaceSpec {
    pub group: GroupSpec,
    pub sigma: Involution,
    pub nu1: Involution,
    pub nu2: Involution,
}

impl SymmetricSpaceSpec {
    pub fn new(group: GroupSpec, sigma: Involution, nu1: Involution, nu2: Involution) -> Result<Self> {
        if !sigma.is_holomorphic() || nu1.is_holomorphic() || nu2.is_holomorphic() {
            return Err(Error::InvalidParams(
                "σ must be holomorphic and ν₁, ν₂ antiholomorphic".into(),
            ));
        }
        sigma.validate()?;
        nu1.validate()?;
        nu2.validate()?;
        Ok(SymmetricSpaceSpec { group, sigma, nu1, nu2 })
    }

    pub fn dim(&self) -> usize {
        self.group.dim()
    }

    /// Largest commutator defect of the three involutions on the given sample.
    pub fn commutation_residual(&self, samples: &[Mat]) -> Result<f64> {
        let pairs = [(&self.sigma, &self.nu1), (&self.sigma, &self.nu2), (&self.nu1, &self.nu2)];
        let mut worst: f64 = 0.0;
        for m in samples {
            for (a, b) in pairs {
                let ab = a.apply(&b.apply(m)?)?;
                let ba = b.apply(&a.apply(m)?)?;
                worst = worst.max(ab.dist(&ba) / m.norm_fro().max(1.0));
            }
        }
        Ok(worst)
    }
}

/// X = X_𝔥 + X_𝔪 with dσ(X_𝔥) = X_𝔥, dσ(X_𝔪) = −X_𝔪.
pub fn split_h_m(spec: &SymmetricSpaceSpec, x: &Mat) -> Result<(Mat, Mat)> {
    let r = spec.group.algebra_residual(x);
    if r > 1e-10 * x.norm_fro().max(1.0) {
        return Err(Error::NotInAlgebra(r));
    }
    let s = spec.sigma.apply_diff(x);
    Ok(((*x + s).scale_re(0.5), (*x - s).scale_re(0.5)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    pub det_residual: f64,
    pub symplectic_residual: Option<f64>,
    pub reality_residual: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl MembershipReport {
    pub fn worst(&self) -> f64 {
        self.det_residual
            .max(self.symplectic_residual.unwrap_or(0.0))
            .max(self.reality_residual.unwrap_or(0.0))
    }
}

pub fn check_group_membership(
    group: GroupSpec,
    nu: Option<&Involution>,
    m: &Mat,
    tol: f64,
) -> MembershipReport {
    let det_residual = (m.det() - c64(1.0, 0.0)).norm();
    let symplectic_residual = group.symplectic_residual(m);
    let reality_residual = nu.map(|v| match v.apply(m) {
        Ok(img) => img.dist(m),
        Err(_) => f64::INFINITY,
    });
    let mut r = MembershipReport {
        det_residual,
        symplectic_residual,
        reality_residual,
        tol,
        pass: false,
    };
    r.pass = r.worst() <= tol;
    r
}

pub fn mat_exp(x: &Mat) -> Mat {
    x.exp()
}

pub fn mat_log_near_id(m: &Mat) -> Result<Mat> {
    m.log_near_id()
}
