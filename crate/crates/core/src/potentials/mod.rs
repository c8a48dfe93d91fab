//! Potential pairs (η, τ), the catalog of worked examples, the morphing
//! condition dν(η_λ(z)) = τ_λ(z̄), and the ± / ′ ″ splittings of 1-forms.

pub mod angle;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{c64, i11, i22, k11, sigma1, GroupSpec, Involution, Mat, SymmetricSpaceSpec};
use crate::error::{Error, Result};
use crate::loops::{circle_samples, TwistedLoop};

pub use angle::{angle_function, AngleFunction, AngleKind};

pub const MAX_POLY_DEGREE: usize = 16;

/// Which half of the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Eta,
    Tau,
}

/// One λ-power of a polynomial coefficient: Σ_{i,j} p_ij(w) E_ij λ^power.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyTerm {
    pub power: i32,
    /// entries[i][j] holds the polynomial coefficients by ascending degree
    pub entries: Vec<Vec<Vec<C64>>>,
}

impl PolyTerm {
    fn eval(&self, w: C64) -> Mat {
        let d = self.entries.len();
        let mut m = Mat::zeros(d);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                m[(i, j)] = p.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * w + c);
            }
        }
        m
    }
}

/// Coefficient of one coordinate differential, as a function of that coordinate.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefFn {
    ConstLoop(TwistedLoop),
    PolyEntry(Vec<PolyTerm>),
    /// The Toda-type coefficient built from an angle function.
    AngleDressed { angle: AngleFunction, side: Side },
}

impl CoefFn {
    /// Nonzero (λ-power, matrix) terms at the base variable w.
    pub fn terms(&self, w: C64) -> Result<Vec<(i32, Mat)>> {
        match self {
            CoefFn::ConstLoop(l) => Ok((l.lo()..=l.hi())
                .map(|k| (k, l.coeff(k)))
                .filter(|(_, m)| m.max_abs() > 0.0)
                .collect()),
            CoefFn::PolyEntry(terms) => Ok(terms.iter().map(|t| (t.power, t.eval(w))).collect()),
            CoefFn::AngleDressed { angle, side } => {
                let half_i = C64::new(0.0, 0.5);
                match side {
                    Side::Eta => {
                        let om = angle.omega(w, c64(0.0, 0.0))? - angle.omega(c64(0.0, 0.0), c64(0.0, 0.0))?;
                        let e = (C64::i() * om).exp();
                        let m = Mat::from_rows(&[[c64(0.0, 0.0), e], [e.inv(), c64(0.0, 0.0)]]);
                        Ok(vec![(-1, m.scale(half_i))])
                    }
                    Side::Tau => {
                        let om = angle.omega(c64(0.0, 0.0), w)?;
                        let e = (-C64::i() * om).exp();
                        let m = Mat::from_rows(&[[c64(0.0, 0.0), e], [e.inv(), c64(0.0, 0.0)]]);
                        Ok(vec![(1, m.scale(-half_i))])
                    }
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefFn::ConstLoop(_))
    }

    pub fn eval(&self, group: GroupSpec, band: i32, w: C64) -> Result<TwistedLoop> {
        let mut l = TwistedLoop::zero(group, band);
        for (k, m) in self.terms(w)? {
            l = l.add(&TwistedLoop::monomial(group, band, k, m));
        }
        Ok(l)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogName {
    Cylinder,
    Hyperboloid,
    SphereVariant,
    Smyth,
    TodaPseud,
    TodaHyper,
    TodaConic,
    Grassmann4,
    Sp2,
}

impl CatalogName {
    pub const ALL: [CatalogName; 9] = [
        CatalogName::Cylinder,
        CatalogName::Hyperboloid,
        CatalogName::SphereVariant,
        CatalogName::Smyth,
        CatalogName::TodaPseud,
        CatalogName::TodaHyper,
        CatalogName::TodaConic,
        CatalogName::Grassmann4,
        CatalogName::Sp2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CatalogName::Cylinder => "cylinder",
            CatalogName::Hyperboloid => "hyperboloid",
            CatalogName::SphereVariant => "sphere_variant",
            CatalogName::Smyth => "smyth",
            CatalogName::TodaPseud => "toda_pseud",
            CatalogName::TodaHyper => "toda_hyper",
            CatalogName::TodaConic => "toda_conic",
            CatalogName::Grassmann4 => "grassmann4",
            CatalogName::Sp2 => "sp2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPair {
    pub id: String,
    pub space: SymmetricSpaceSpec,
    /// number of complex (or para-complex) coordinates
    pub n: usize,
    pub eta: Vec<CoefFn>,
    pub tau: Vec<CoefFn>,
    pub analytic: bool,
    /// coefficient functions are evaluated for |w| ≤ this in every coordinate
    pub half_width: f64,
}

impl PotentialPair {
    pub fn group(&self) -> GroupSpec {
        self.space.group
    }

    /// The angle function of a Toda potential.
    pub fn angle_function(&self) -> Option<AngleFunction> {
        self.eta.iter().find_map(|c| match c {
            CoefFn::AngleDressed { angle, .. } => Some(*angle),
            _ => None,
        })
    }

    pub fn side(&self, side: Side) -> &[CoefFn] {
        match side {
            Side::Eta => &self.eta,
            Side::Tau => &self.tau,
        }
    }

    /// Band, twist parity and algebra membership of every coefficient at a few points.
    pub fn validate(&self) -> Result<()> {
        if self.eta.len() != self.n || self.tau.len() != self.n {
            return Err(Error::InvalidParams("need one η and one τ coefficient per coordinate".into()));
        }
        for side in [Side::Eta, Side::Tau] {
            for f in self.side(side) {
                if let CoefFn::PolyEntry(ts) = f {
                    for t in ts {
                        let deg = t.entries.iter().flatten().map(|p| p.len()).max().unwrap_or(0);
                        if deg > MAX_POLY_DEGREE + 1 {
                            return Err(Error::InvalidParams(format!("polynomial degree {} exceeds {MAX_POLY_DEGREE}", deg - 1)));
                        }
                        if t.entries.len() != self.space.dim() || t.entries.iter().any(|r| r.len() != self.space.dim()) {
                            return Err(Error::InvalidParams("polynomial entry table has the wrong size".into()));
                        }
                    }
                }
                for w in [0.0, 0.5 * self.half_width, -0.5 * self.half_width] {
                    for (k, m) in f.terms(c64(w, 0.0))? {
                        let ok_band = match side {
                            Side::Eta => k >= -1,
                            Side::Tau => k <= 1,
                        };
                        if !ok_band {
                            return Err(Error::InvalidParams(format!("{side:?} coefficient has power {k} outside its band")));
                        }
                        let r = self.space.group.algebra_residual(&m);
                        if r > 1e-12 * m.norm_fro().max(1.0) {
                            return Err(Error::NotInAlgebra(r));
                        }
                        // even powers in 𝔥 (σ-fixed), odd powers in 𝔪
                        let s = self.space.sigma.apply_diff(&m);
                        let target = if k.rem_euclid(2) == 0 { m } else { -m };
                        if s.dist(&target) > 1e-12 * m.norm_fro().max(1.0) {
                            return Err(Error::InvalidParams(format!("coefficient at power {k} violates twist parity")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn in_domain(&self, w: C64) -> bool {
        w.re.abs() <= self.half_width + 1e-12 && w.im.abs() <= self.half_width + 1e-12
    }
}

fn sl2_space(nu1: Involution, nu2: Involution) -> SymmetricSpaceSpec {
    SymmetricSpaceSpec::new(GroupSpec::SL2C, Involution::ConjugateBy(i11()), nu1, nu2)
        .expect("catalog involutions are valid")
}

fn conj_by(k: Mat) -> Involution {
    Involution::ConjugateBy(k)
}

fn const_coef(group: GroupSpec, band: i32, power: i32, m: Mat) -> CoefFn {
    CoefFn::ConstLoop(TwistedLoop::monomial(group, band, power, m))
}

fn cplx(rows: [[C64; 2]; 2]) -> Mat {
    Mat::from_rows(&rows)
}

/// The worked examples. τ is chosen so that the morphing condition holds for
/// every entry except the pseudosphere and hyperbolic Toda potentials.
pub fn catalog_potential(name: CatalogName, params: CatalogParams, band: i32) -> Result<PotentialPair> {
    let g2 = GroupSpec::SL2C;
    let zero = c64(0.0, 0.0);
    let ii = c64(0.0, 1.0);
    let ict = Involution::InverseConjugateTranspose;
    let conj = Involution::EntrywiseConjugate;
    let id = name.as_str().to_string();
    let pair = match name {
        CatalogName::Cylinder => PotentialPair {
            id,
            space: sl2_space(ict, conj),
            n: 1,
            eta: vec![const_coef(g2, band, -1, sigma1())],
            tau: vec![const_coef(g2, band, 1, -sigma1())],
            analytic: true,
            half_width: 1.0,
        },
        CatalogName::Hyperboloid => PotentialPair {
            id,
            space: sl2_space(
                Involution::Compose(vec![ict, conj_by(i11())]),
                Involution::Compose(vec![conj, conj_by(i11())]),
            ),
            n: 1,
            eta: vec![const_coef(g2, band, -1, cplx([[zero, ii], [zero, zero]]))],
            tau: vec![const_coef(g2, band, 1, cplx([[zero, zero], [-ii, zero]]))],
            analytic: true,
            half_width: 1.0,
        },
        CatalogName::SphereVariant => PotentialPair {
            id,
            space: sl2_space(ict, Involution::Compose(vec![conj, conj_by(i11())])),
            n: 1,
            eta: vec![const_coef(g2, band, -1, cplx([[zero, ii], [zero, zero]]))],
            tau: vec![const_coef(g2, band, 1, cplx([[zero, zero], [ii, zero]]))],
            analytic: true,
            half_width: 1.0,
        },
        CatalogName::Smyth => {
            let m = params.m.ok_or_else(|| Error::InvalidParams("smyth needs m".into()))?;
            if m < 1 || m as usize > MAX_POLY_DEGREE {
                return Err(Error::InvalidParams(format!("smyth needs 1 <= m <= {MAX_POLY_DEGREE}, got {m}")));
            }
            let mono = |c: f64| -> Vec<C64> {
                let mut v = vec![zero; m as usize + 1];
                v[m as usize] = c64(c, 0.0);
                v
            };
            let one = |c: f64| vec![c64(c, 0.0)];
            PotentialPair {
                id: format!("smyth(m={m})"),
                space: sl2_space(ict, conj),
                n: 1,
                eta: vec![CoefFn::PolyEntry(vec![PolyTerm {
                    power: -1,
                    entries: vec![vec![vec![], one(1.0)], vec![mono(1.0), vec![]]],
                }])],
                tau: vec![CoefFn::PolyEntry(vec![PolyTerm {
                    power: 1,
                    entries: vec![vec![vec![], mono(-1.0)], vec![one(-1.0), vec![]]],
                }])],
                analytic: true,
                half_width: 1.0,
            }
        }
        CatalogName::TodaPseud | CatalogName::TodaHyper | CatalogName::TodaConic => {
            let kind = match name {
                CatalogName::TodaPseud => AngleKind::Pseud,
                CatalogName::TodaHyper => AngleKind::Hyper {
                    b: params.b.ok_or_else(|| Error::InvalidParams("toda_hyper needs b".into()))?,
                },
                _ => AngleKind::Conic {
                    b: params.b.ok_or_else(|| Error::InvalidParams("toda_conic needs b".into()))?,
                },
            };
            let angle = AngleFunction::new(kind)?;
            let id = match kind {
                AngleKind::Pseud => id,
                AngleKind::Hyper { b } | AngleKind::Conic { b } => format!("{id}(b={b})"),
            };
            PotentialPair {
                id,
                space: sl2_space(ict.clone(), ict),
                n: 1,
                eta: vec![CoefFn::AngleDressed { angle, side: Side::Eta }],
                tau: vec![CoefFn::AngleDressed { angle, side: Side::Tau }],
                analytic: true,
                half_width: (0.98 * angle.reach()).min(1.0),
            }
        }
        CatalogName::Grassmann4 => {
            let g = GroupSpec::SL4C;
            let mut n1 = Mat::zeros(4);
            n1[(0, 3)] = c64(1.0, 0.0);
            n1[(3, 0)] = c64(-1.0, 0.0);
            let mut n2 = Mat::zeros(4);
            n2[(1, 2)] = c64(1.0, 0.0);
            n2[(2, 1)] = c64(1.0, 0.0);
            PotentialPair {
                id,
                space: SymmetricSpaceSpec::new(g, conj_by(i22()), ict, conj)?,
                n: 2,
                eta: vec![const_coef(g, band, -1, n1), const_coef(g, band, -1, n2)],
                tau: vec![const_coef(g, band, 1, n1), const_coef(g, band, 1, -n2)],
                analytic: true,
                half_width: 1.0,
            }
        }
        CatalogName::Sp2 => {
            let g = GroupSpec::SP2C;
            let m = Mat::from_real_rows(&[
                [0.0, 1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, -1.0],
                [0.0, 0.0, -1.0, 0.0],
            ]);
            PotentialPair {
                id,
                space: SymmetricSpaceSpec::new(
                    g,
                    conj_by(k11()),
                    ict.clone(),
                    Involution::Compose(vec![ict, conj_by(k11())]),
                )?,
                n: 2,
                eta: vec![const_coef(g, band, -1, m), const_coef(g, band, 1, -m)],
                tau: vec![const_coef(g, band, 1, -m), const_coef(g, band, -1, m)],
                analytic: true,
                half_width: 1.0,
            }
        }
    };
    pair.validate()?;
    Ok(pair)
}

/// Evaluates the coefficient of d(coordinate) on the given side as a loop.
pub fn eval_potential(p: &PotentialPair, point: &[C64], coordinate: usize, side: Side, band: i32) -> Result<TwistedLoop> {
    if coordinate >= p.n || point.len() != p.n {
        return Err(Error::DomainError(format!("coordinate {coordinate} out of range for n = {}", p.n)));
    }
    let w = point[coordinate];
    if !p.in_domain(w) {
        return Err(Error::DomainError(format!("{w} outside the box of half-width {}", p.half_width)));
    }
    let l = p.side(side)[coordinate].eval(p.group(), band, w)?;
    let r = l.twist_residual(&p.space.sigma)?;
    if r > 1e-10 * l.norm_l1().max(1.0) {
        return Err(Error::InvalidParams(format!("coefficient violates twist parity ({r:.2e})")));
    }
    Ok(l)
}

/// max over sample points z and λ ∈ S¹ of ‖dν₁(η(z) at 1/λ̄) − τ(z̄) at λ‖.
pub fn check_morphing(p: &PotentialPair, samples: &[C64]) -> Result<f64> {
    let nu = &p.space.nu1;
    let mut worst: f64 = 0.0;
    for &z in samples {
        for a in 0..p.n {
            let eta = p.eta[a].terms(z)?;
            let tau = p.tau[a].terms(z.conj())?;
            for mu in circle_samples() {
                let at = mu.conj().inv();
                let e = eta.iter().fold(Mat::zeros(p.space.dim()), |acc, (k, m)| acc + m.scale(at.powi(*k)));
                let t = tau.iter().fold(Mat::zeros(p.space.dim()), |acc, (k, m)| acc + m.scale(mu.powi(*k)));
                worst = worst.max(nu.apply_diff(&e).dist(&t));
            }
        }
    }
    Ok(worst)
}

/// A 5×5 complex box of half-width r around the origin.
pub fn morphing_samples(r: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(25);
    for i in 0..5 {
        for j in 0..5 {
            out.push(c64(r * (i as f64 - 2.0) / 2.0, r * (j as f64 - 2.0) / 2.0));
        }
    }
    out
}

/// Default morphing check on a box a quarter of the domain size.
pub fn check_morphing_default(p: &PotentialPair) -> Result<f64> {
    check_morphing(p, &morphing_samples(0.25 * p.half_width))
}

/// Algebra-valued 1-form sample in two real coordinates, A·dx + B·dy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormSample {
    pub dx: Mat,
    pub dy: Mat,
}

/// Splits a form into its (dx, dy) parts (para) or (dz, dz̄) parts (complex).
pub fn split_pm(alpha: &FormSample, para: bool) -> (FormSample, FormSample) {
    let d = alpha.dx.dim();
    let z = Mat::zeros(d);
    if para {
        (FormSample { dx: alpha.dx, dy: z }, FormSample { dx: z, dy: alpha.dy })
    } else {
        // A dx + B dy = P dz + Q dz̄ with P = (A − iB)/2, Q = (A + iB)/2
        let ib = alpha.dy.scale(C64::i());
        let p = (alpha.dx - ib).scale_re(0.5);
        let q = (alpha.dx + ib).scale_re(0.5);
        (
            FormSample { dx: p, dy: p.scale(C64::i()) },
            FormSample { dx: q, dy: q.scale(-C64::i()) },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: i32 = 32;

    #[test]
    fn cylinder_and_smyth_coefficients() {
        let p = catalog_potential(CatalogName::Cylinder, CatalogParams::default(), N).unwrap();
        let l = eval_potential(&p, &[c64(0.37, 0.0)], 0, Side::Eta, N).unwrap();
        assert!(l.coeff(-1).dist(&sigma1()) < 1e-15);
        let s = catalog_potential(CatalogName::Smyth, CatalogParams { m: Some(3), b: None }, N).unwrap();
        let l = eval_potential(&s, &[c64(0.5, 0.0)], 0, Side::Eta, N).unwrap();
        assert!(l.coeff(-1).dist(&Mat::from_real_rows(&[[0.0, 1.0], [0.125, 0.0]])) < 1e-15);
    }

    #[test]
    fn conic_eta_at_origin() {
        let p = catalog_potential(CatalogName::TodaConic, CatalogParams { m: None, b: Some(0.5) }, N).unwrap();
        let l = eval_potential(&p, &[c64(0.0, 0.0)], 0, Side::Eta, N).unwrap();
        assert!(l.coeff(-1).dist(&sigma1().scale(c64(0.0, 0.5))) < 1e-15);
    }

    #[test]
    fn morphing_gate() {
        let ok = |name, params| {
            let p = catalog_potential(name, params, N).unwrap();
            check_morphing_default(&p).unwrap()
        };
        let none = CatalogParams::default();
        assert!(ok(CatalogName::Cylinder, none) < 1e-12);
        assert!(ok(CatalogName::Hyperboloid, none) < 1e-12);
        assert!(ok(CatalogName::TodaConic, CatalogParams { m: None, b: Some(0.5) }) < 1e-10);
        assert!(ok(CatalogName::TodaPseud, none) > 0.1);
    }

    #[test]
    fn bad_params() {
        assert!(catalog_potential(CatalogName::Smyth, CatalogParams { m: Some(0), b: None }, N).is_err());
        assert!(catalog_potential(CatalogName::TodaConic, CatalogParams { m: None, b: Some(1.0) }, N).is_err());
    }

    #[test]
    fn splittings() {
        let m = sigma1();
        let n = Mat::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        let (p, q) = split_pm(&FormSample { dx: m, dy: n }, true);
        assert_eq!(p.dx, m);
        assert_eq!(q.dy, n);
        assert_eq!(p.dy.max_abs(), 0.0);
        let (p, q) = split_pm(&FormSample { dx: m, dy: m.scale(C64::i()) }, false);
        assert!(p.dx.dist(&m) < 1e-15 && q.dx.max_abs() < 1e-15);
    }
}
