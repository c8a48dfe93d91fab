//! Normalized Birkhoff splitting on the truncated band and the pair-Iwasawa
//! decomposition (A, B) = (C, C)·(B⁺, B⁻).

mod dense;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::Mat;
use crate::error::{Error, Result};
use crate::loops::{circle_samples, TwistedLoop};

pub use dense::{DenseMatrix, Lu};

/// Condition numbers above this are treated as leaving the big cell.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BirkhoffConvention {
    /// L = L₋·L₊ with L₋(∞) = Id.
    MinusStarPlus,
    /// L = L₊·L₋ with L₊(0) = Id.
    PlusStarMinus,
}

/// How the H^ℂ-valued middle term D = L₊(0) of B⁻¹A = L₋·L₊ is distributed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IwasawaNormalization {
    /// B⁺(0) = Id; all of D goes into B⁻.
    PlusStarred,
    /// B⁺ = √D⁻¹·L₊, B⁻ = √D⁻¹·L₋⁻¹, so that B⁺(0)·B⁻(∞) = Id.
    #[default]
    Balanced,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    /// max over S¹ samples of ‖L − L₁·L₂‖
    pub residual: f64,
    /// deviation of the starred factor from Id at its normalization point,
    /// plus the residual of the truncated splitting equations
    pub normalization_residual: f64,
    /// 1-norm condition number of the block-Toeplitz system
    pub condition: f64,
    /// only set by `pair_iwasawa`: ‖A·(B⁺)⁻¹ − B·(B⁻)⁻¹‖ on S¹
    pub cross_residual: f64,
}

struct Split {
    minus: TwistedLoop,
    plus: TwistedLoop,
    w: TwistedLoop,
    condition: f64,
    eq_residual: f64,
}

/// Block-Toeplitz solve for W = L₋⁻¹ = Id + Σ_{p≥1} W₋ₚ λ^{−p}:
/// Σ_p W₋ₚ L_{p−q} = −L₋_q for q = 1..N.
fn split_minus_star_plus(l: &TwistedLoop) -> Result<Split> {
    let n = l.working_band();
    let d = l.dim();
    let group = l.group();
    let nn = n as usize * d;
    // Tᵀ system: block (q, p) = L_{p−q}ᵀ, unknown block p = W₋ₚᵀ, rhs block q = −L₋_qᵀ
    let mut m = DenseMatrix::zeros(nn);
    let coeffs: Vec<Mat> = (-(n - 1)..=(n - 1)).map(|k| l.coeff(k)).collect();
    for q in 0..n as usize {
        for p in 0..n as usize {
            let k = p as i32 - q as i32;
            let blk = coeffs[(k + n - 1) as usize];
            if blk.max_abs() == 0.0 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    // (Lᵀ)_{ij} = L_{ji}
                    m.set(q * d + i, p * d + j, blk[(j, i)]);
                }
            }
        }
    }
    let lu = match Lu::factor(&m) {
        Some(lu) => lu,
        None => return Err(Error::NotInBigCell { condition: f64::INFINITY }),
    };
    let cond = m.norm_1() * lu.inverse_norm_1_estimate();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::NotInBigCell { condition: cond });
    }
    let mut w = TwistedLoop::identity(group, n);
    let mut sol: Vec<Vec<C64>> = Vec::with_capacity(d);
    for col in 0..d {
        // column `col` of every W₋ₚᵀ block, i.e. row `col` of W₋ₚ
        let mut rhs = vec![C64::new(0.0, 0.0); nn];
        for q in 0..n as usize {
            let lq = l.coeff(-(q as i32 + 1));
            for i in 0..d {
                rhs[q * d + i] = -lq[(col, i)];
            }
        }
        let mut x = lu.solve(&rhs);
        // one step of iterative refinement
        let r = m.mul_vec(&x);
        let corr: Vec<C64> = rhs.iter().zip(&r).map(|(a, b)| a - b).collect();
        let dx = lu.solve(&corr);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        sol.push(x);
    }
    for p in 0..n as usize {
        let mut wp = Mat::zeros(d);
        for (row, x) in sol.iter().enumerate() {
            for j in 0..d {
                wp[(row, j)] = x[p * d + j];
            }
        }
        w.set_coeff(-(p as i32 + 1), wp);
    }
    let wl = w.mul(l);
    let scale = l.norm_l1().max(1.0);
    let eq_residual = (1..=n)
        .map(|j| wl.coeff(-j).norm_fro())
        .fold(0.0, f64::max)
        / scale;
    let plus = wl.project(0, n);
    let minus = w.inverse()?;
    Ok(Split { minus, plus, w, condition: cond, eq_residual })
}

fn sampled_residual(l: &TwistedLoop, a: &TwistedLoop, b: &TwistedLoop) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for mu in circle_samples() {
        let r = l.eval(mu)?.dist(&(a.eval(mu)? * b.eval(mu)?));
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Normalized Birkhoff factorization. Returns (first, second) with L = first·second.
pub fn birkhoff(
    l: &TwistedLoop,
    conv: BirkhoffConvention,
) -> Result<(TwistedLoop, TwistedLoop, FactorizationReport)> {
    match conv {
        BirkhoffConvention::MinusStarPlus => {
            let s = split_minus_star_plus(l)?;
            let residual = sampled_residual(l, &s.minus, &s.plus)?;
            let id = Mat::identity(l.dim());
            let report = FactorizationReport {
                residual,
                normalization_residual: s.minus.coeff(0).dist(&id) + s.eq_residual,
                condition: s.condition,
                cross_residual: 0.0,
            };
            Ok((s.minus, s.plus, report))
        }
        BirkhoffConvention::PlusStarMinus => {
            let (m, p, mut report) = birkhoff(&l.reflect(), BirkhoffConvention::MinusStarPlus)?;
            let (first, second) = (m.reflect(), p.reflect());
            report.residual = sampled_residual(l, &first, &second)?;
            Ok((first, second, report))
        }
    }
}

/// Reciprocal condition number of the truncated splitting system; 0 off the big cell.
pub fn big_cell_distance(l: &TwistedLoop) -> f64 {
    match split_minus_star_plus(l) {
        Ok(s) => 1.0 / s.condition,
        Err(_) => 0.0,
    }
}

#[derive(Clone, Debug)]
pub struct Iwasawa {
    pub c: TwistedLoop,
    pub bplus: TwistedLoop,
    pub bminus: TwistedLoop,
    pub report: FactorizationReport,
}

/// Splits B⁻¹·A = (B⁻)⁻¹·B⁺ and returns C = A·(B⁺)⁻¹ = B·(B⁻)⁻¹.
pub fn pair_iwasawa(
    a: &TwistedLoop,
    b: &TwistedLoop,
    norm: IwasawaNormalization,
) -> Result<Iwasawa> {
    let binv = b.inverse()?;
    pair_iwasawa_with_inverse(a, b, &binv, norm)
}

/// As [`pair_iwasawa`] with B⁻¹ supplied by the caller (grid builders cache it per axis node).
pub fn pair_iwasawa_with_inverse(
    a: &TwistedLoop,
    b: &TwistedLoop,
    binv: &TwistedLoop,
    norm: IwasawaNormalization,
) -> Result<Iwasawa> {
    let l = binv.mul(a);
    let s = split_minus_star_plus(&l)?;
    let dmat = s.plus.coeff(0);
    let h = match norm {
        IwasawaNormalization::PlusStarred => dmat,
        IwasawaNormalization::Balanced => dmat.sqrt().map_err(|_| Error::NotInBigCell {
            condition: f64::INFINITY,
        })?,
    };
    let hinv = h.inverse().map_err(|_| Error::NotInBigCell { condition: f64::INFINITY })?;
    let bplus = s.plus.left_mul(&hinv);
    // (B⁻)⁻¹ = L₋·h and B⁻ = h⁻¹·L₋⁻¹ = h⁻¹·W
    let bminus = s.w.left_mul(&hinv);
    let plus_inv = s.plus.inverse()?;
    let c = a.mul(&plus_inv).right_mul(&h);
    let c_alt = b.mul(&s.minus).right_mul(&h);
    let mut cross: f64 = 0.0;
    let mut residual: f64 = 0.0;
    for mu in circle_samples() {
        let cv = c.eval(mu)?;
        cross = cross.max(cv.dist(&c_alt.eval(mu)?));
        residual = residual.max(l.eval(mu)?.dist(&(s.minus.eval(mu)? * s.plus.eval(mu)?)));
    }
    let id = Mat::identity(a.dim());
    let normalization_residual = match norm {
        IwasawaNormalization::PlusStarred => bplus.coeff(0).dist(&id),
        IwasawaNormalization::Balanced => (bplus.coeff(0) * bminus.coeff(0)).dist(&id),
    } + s.eq_residual;
    Ok(Iwasawa {
        c,
        bplus,
        bminus,
        report: FactorizationReport {
            residual,
            normalization_residual,
            condition: s.condition,
            cross_residual: cross,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c64, sigma1, GroupSpec};

    fn mono(k: i32, m: Mat) -> TwistedLoop {
        TwistedLoop::monomial(GroupSpec::SL2C, 32, k, m)
    }

    #[test]
    fn identity_factors() {
        let id = TwistedLoop::identity(GroupSpec::SL2C, 16);
        let (m, p, r) = birkhoff(&id, BirkhoffConvention::MinusStarPlus).unwrap();
        assert!(m.eval(c64(0.7, 0.2)).unwrap().dist(&Mat::identity(2)) < 1e-15);
        assert!(p.eval(c64(0.7, 0.2)).unwrap().dist(&Mat::identity(2)) < 1e-15);
        assert!((r.condition - 1.0).abs() < 1e-12);
        assert!((big_cell_distance(&id) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_exponentials() {
        let am = TwistedLoop::exp(&mono(-1, sigma1().scale_re(0.3)));
        let ap = TwistedLoop::exp(&mono(1, sigma1().scale_re(0.2)));
        let l = am.mul(&ap);
        let (m, p, r) = birkhoff(&l, BirkhoffConvention::MinusStarPlus).unwrap();
        assert!(r.residual < 1e-12);
        for mu in [c64(1.0, 0.0), c64(0.5, 0.5), c64(2.0, 0.0)] {
            assert!(m.eval(mu).unwrap().dist(&am.eval(mu).unwrap()) < 1e-9);
            assert!(p.eval(mu).unwrap().dist(&ap.eval(mu).unwrap()) < 1e-9);
        }
        let (p2, m2, _) = birkhoff(&l, BirkhoffConvention::PlusStarMinus).unwrap();
        assert!(p2.eval(c64(0.9, 0.1)).unwrap().dist(&ap.eval(c64(0.9, 0.1)).unwrap()) < 1e-9);
        assert!(m2.eval(c64(0.9, 0.1)).unwrap().dist(&am.eval(c64(0.9, 0.1)).unwrap()) < 1e-9);
    }
}
