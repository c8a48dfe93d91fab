//! Sym-type formulas turning extended frames into CMC surfaces and K-surfaces,
//! and the identification of 2×2 traceless matrices with ℝ³ or ℝ³₁.
//!
//! With D = λ∂_λC·C⁻¹ and Ad(C)X = C·X·C⁻¹ the five formulas are
//!
//! | variant             | matrix                               | frame   |
//! |---------------------|--------------------------------------|---------|
//! | `R3Cmc`             | −(iD + ½Ad(C)diag(i, −i))            | complex |
//! | `R31Timelike`       | −2(−D + ½Ad(C)diag(−1, 1))           | real    |
//! | `R31Spacelike`      | −(iD + ½Ad(C)diag(i, −i))            | complex |
//! | `R31TimelikeHalf`   | −½(D + ½Ad(C)diag(1, −1))            | real    |
//! | `KSurface`          | D                                    | real    |
//!
//! Writing M = a·σ₁ + b·E + d·σ₃ (σ₁ = [[0,1],[1,0]], E = [[0,−1],[1,0]],
//! σ₃ = diag(1,−1)), each variant reads off a real triple from (a, b, d). The
//! maps were fixed on one worked example per variant and checked on a second.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Involution, Mat};
use crate::error::{Error, Result};
use crate::frames::{ExtendedFrame, GridMode, GridSpec};
use crate::loops::TwistedLoop;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SymVariant {
    R3Cmc,
    R31Timelike,
    R31Spacelike,
    R31TimelikeHalf,
    KSurface,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Signature {
    Euclidean,
    Lorentz1,
}

impl SymVariant {
    pub const ALL: [SymVariant; 5] = [
        SymVariant::R3Cmc,
        SymVariant::R31Timelike,
        SymVariant::R31Spacelike,
        SymVariant::R31TimelikeHalf,
        SymVariant::KSurface,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SymVariant::R3Cmc => "R3_CMC",
            SymVariant::R31Timelike => "R31_TIMELIKE",
            SymVariant::R31Spacelike => "R31_SPACELIKE",
            SymVariant::R31TimelikeHalf => "R31_TIMELIKE_HALF",
            SymVariant::KSurface => "K_SURFACE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|v| v.as_str() == s)
    }

    pub fn signature(self) -> Signature {
        match self {
            SymVariant::R3Cmc | SymVariant::KSurface => Signature::Euclidean,
            _ => Signature::Lorentz1,
        }
    }

    /// Diagonal of the ambient inner product in output coordinates.
    pub fn metric(self) -> [f64; 3] {
        match self {
            SymVariant::R3Cmc | SymVariant::KSurface => [1.0, 1.0, 1.0],
            SymVariant::R31Timelike | SymVariant::R31TimelikeHalf => [-1.0, 1.0, 1.0],
            SymVariant::R31Spacelike => [1.0, 1.0, -1.0],
        }
    }

    /// Frames the formula applies to: complex (λ ∈ S¹) or real (θ ∈ ℝ⁺).
    pub fn mode(self) -> GridMode {
        match self {
            SymVariant::R3Cmc | SymVariant::R31Spacelike => GridMode::Morphed,
            _ => GridMode::Para,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub grid: GridSpec,
    /// one entry per grid node, `None` where the frame is missing
    pub points: Vec<Option<[f64; 3]>>,
    pub signature: Signature,
    pub variant: SymVariant,
    /// λ (or θ) at which the formula was evaluated, as (re, im)
    pub eval_parameter: [f64; 2],
    pub potential_id: String,
}

impl SurfaceSample {
    pub fn valid_count(&self) -> usize {
        self.points.iter().filter(|p| p.is_some()).count()
    }
}

/// ∂C/∂λ at λ = `at`, computed on the band.
pub fn lambda_derivative_at(c: &TwistedLoop, at: C64) -> Result<Mat> {
    Ok(c.lambda_derivative().eval(at)?.scale(at.inv()))
}

/// (a, b, d) with M = a·σ₁ + b·E + d·σ₃; M must be 2×2 and traceless.
pub fn decompose(m: &Mat) -> Result<(C64, C64, C64)> {
    if m.dim() != 2 {
        return Err(Error::NotInExpectedForm(f64::INFINITY));
    }
    let tr = m.trace().norm();
    if tr > 1e-7 * m.norm_fro().max(1.0) {
        return Err(Error::NotInExpectedForm(tr));
    }
    let a = (m[(0, 1)] + m[(1, 0)]) * 0.5;
    let b = (m[(1, 0)] - m[(0, 1)]) * 0.5;
    Ok((a, b, m[(0, 0)]))
}

/// Real triple of a Sym matrix; imaginary parts above 1e-7 (relative) are rejected.
pub fn algebra_to_vec(variant: SymVariant, m: &Mat) -> Result<[f64; 3]> {
    let (a, b, d) = decompose(m)?;
    let i = C64::i();
    let v = match variant {
        SymVariant::R3Cmc | SymVariant::KSurface => [2.0 * i * a, -2.0 * b, -2.0 * i * d],
        SymVariant::R31Timelike => [b, a, -d],
        SymVariant::R31Spacelike => [a, i * b, -i * d],
        SymVariant::R31TimelikeHalf => [2.0 * i * a, -2.0 * i * b, 2.0 * d],
    };
    let scale = v.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let imag = v.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if imag > 1e-7 * scale {
        return Err(Error::NotInExpectedForm(imag));
    }
    Ok([v[0].re, v[1].re, v[2].re])
}

/// The variant's matrix at one frame loop, evaluated at λ = `at`.
pub fn sym_matrix(variant: SymVariant, c: &TwistedLoop, at: C64) -> Result<Mat> {
    let cv = c.eval(at)?;
    let cinv = cv.inverse()?;
    let d = c.lambda_derivative().eval(at)? * cinv;
    let ad = |x: Mat| cv * x * cinv;
    let i = C64::i();
    let half = |x: Mat| x.scale_re(0.5);
    Ok(match variant {
        SymVariant::R3Cmc | SymVariant::R31Spacelike => {
            -(d.scale(i) + half(ad(Mat::diag(&[i, -i]))))
        }
        SymVariant::R31Timelike => (-d + half(ad(Mat::real_diag(&[-1.0, 1.0])))).scale_re(-2.0),
        SymVariant::R31TimelikeHalf => (d + half(ad(Mat::real_diag(&[1.0, -1.0])))).scale_re(-0.5),
        SymVariant::KSurface => d,
    })
}

/// Reality residual of C at the evaluation parameter, for the involution the variant relies on.
fn frame_reality(frame: &ExtendedFrame, variant: SymVariant, c: &TwistedLoop, at: C64) -> Result<f64> {
    let nu: &Involution = match variant.mode() {
        GridMode::Morphed => &frame.space.nu1,
        GridMode::Para => &frame.space.nu2,
    };
    let cv = c.eval(at)?;
    Ok(nu.apply(&cv)?.dist(&cv) / cv.norm_fro().max(1.0))
}

/// Reality tolerance for the frame fed to a Sym formula.
pub const SYM_REALITY_TOL: f64 = 1e-7;

/// Applies the variant's formula at every valid node of the frame. `at` is
/// λ ∈ S¹ for complex frames and θ > 0 for real ones; the worked examples use 1.
pub fn sym_formula(frame: &ExtendedFrame, variant: SymVariant, at: C64) -> Result<SurfaceSample> {
    if frame.group().dim() != 2 {
        return Err(Error::InvalidParams("Sym formulas need a 2×2 frame".into()));
    }
    if frame.grid.mode != variant.mode() {
        return Err(Error::WrongRealityForVariant(f64::INFINITY));
    }
    let mu = at;
    let points: Vec<Result<Option<[f64; 3]>>> = frame
        .loops
        .par_iter()
        .map(|l| {
            let Some(c) = l else { return Ok(None) };
            let r = frame_reality(frame, variant, c, mu)?;
            if !(r < SYM_REALITY_TOL) {
                return Err(Error::WrongRealityForVariant(r));
            }
            Ok(Some(algebra_to_vec(variant, &sym_matrix(variant, c, mu)?)?))
        })
        .collect();
    Ok(SurfaceSample {
        grid: frame.grid.clone(),
        points: points.into_iter().collect::<Result<_>>()?,
        signature: variant.signature(),
        variant,
        eval_parameter: [at.re, at.im],
        potential_id: frame.potential_id.clone(),
    })
}
