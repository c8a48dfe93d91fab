use lpfg::algebra::{i11, i22, GroupSpec, Involution, Mat};
use lpfg::factor::{birkhoff, pair_iwasawa, BirkhoffConvention, IwasawaNormalization};
use lpfg::loops::{RealityKind, TwistedLoop};
use lpfg::C64;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

const BAND: i32 = 16;

struct Setting {
    group: GroupSpec,
    sigma: Involution,
    nu: Involution,
}

fn settings() -> Vec<Setting> {
    vec![
        Setting { group: GroupSpec::SL2C, sigma: Involution::ConjugateBy(i11()), nu: Involution::EntrywiseConjugate },
        Setting { group: GroupSpec::SL2C, sigma: Involution::ConjugateBy(i11()), nu: Involution::InverseConjugateTranspose },
        Setting { group: GroupSpec::SL4C, sigma: Involution::ConjugateBy(i22()), nu: Involution::EntrywiseConjugate },
    ]
}

/// exp of a twisted, ν-real loop-algebra element with coefficients of size ~ amp·0.5^|k|.
fn random_loop(rng: &mut StdRng, s: &Setting, amp: f64, lo: i32, hi: i32) -> TwistedLoop {
    let d = s.group.dim();
    let mut x = TwistedLoop::zero(s.group, BAND);
    for k in lo..=hi {
        let scale = amp * 0.5f64.powi(k.abs());
        let mut m = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
            }
        }
        let tr = m.trace() / d as f64;
        m = m - Mat::identity(d).scale(tr);
        // even powers σ-fixed, odd powers σ-anti-fixed, then the ν-real part
        let sm = s.sigma.apply_diff(&m);
        m = if k % 2 == 0 { (m + sm).scale_re(0.5) } else { (m - sm).scale_re(0.5) };
        m = (m + s.nu.apply_diff(&m)).scale_re(0.5);
        x.set_coeff(k, m);
    }
    TwistedLoop::exp(&x)
}

fn loop_dist(a: &TwistedLoop, b: &TwistedLoop) -> f64 {
    lpfg::loops::circle_samples().into_iter().map(|mu| a.eval(mu).unwrap().dist(&b.eval(mu).unwrap())).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 50, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn birkhoff_properties(seed in any::<u64>(), which in 0usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = &settings()[which];
        let l = random_loop(&mut rng, s, 0.3, -4, 4);
        let first_kind = RealityKind::FirstKind(s.nu.clone());
        prop_assert!(l.twist_residual(&s.sigma).unwrap() < 1e-10);
        prop_assert!(l.reality_residual(&first_kind).unwrap() < 1e-10);

        let (m, p, rep) = birkhoff(&l, BirkhoffConvention::MinusStarPlus).unwrap();
        prop_assert!(rep.residual < 1e-8, "reconstruction {}", rep.residual);
        prop_assert!(rep.normalization_residual < 1e-9);
        prop_assert!(m.is_minus() && p.is_plus());
        for f in [&m, &p] {
            prop_assert!(f.twist_residual(&s.sigma).unwrap() < 1e-8);
            prop_assert!(f.reality_residual(&first_kind).unwrap() < 1e-8);
        }
        // multiplying and refactoring returns the same factors
        let (m2, p2, _) = birkhoff(&m.mul(&p), BirkhoffConvention::MinusStarPlus).unwrap();
        prop_assert!(loop_dist(&m, &m2) < 1e-8 && loop_dist(&p, &p2) < 1e-8);
        // a factor is its own factorization
        let (m3, p3, _) = birkhoff(&p, BirkhoffConvention::MinusStarPlus).unwrap();
        prop_assert!(loop_dist(&m3, &TwistedLoop::identity(s.group, BAND)) < 1e-8 && loop_dist(&p3, &p) < 1e-8);

        let (q, r, rep) = birkhoff(&l, BirkhoffConvention::PlusStarMinus).unwrap();
        prop_assert!(rep.residual < 1e-8);
        prop_assert!(q.is_plus() && r.is_minus());
        prop_assert!(q.coeff(0).dist(&Mat::identity(s.group.dim())) < 1e-9);
    }

    #[test]
    fn pair_iwasawa_keeps_first_kind_reality(seed in any::<u64>(), which in 0usize..3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = &settings()[which];
        let a = random_loop(&mut rng, s, 0.3, -1, 0);
        let b = random_loop(&mut rng, s, 0.3, 0, 1);
        let iw = pair_iwasawa(&a, &b, IwasawaNormalization::Balanced).unwrap();
        prop_assert!(iw.report.cross_residual < 1e-8);
        prop_assert!(iw.c.reality_residual(&RealityKind::FirstKind(s.nu.clone())).unwrap() < 1e-8);
        prop_assert!(iw.c.twist_residual(&s.sigma).unwrap() < 1e-8);
        prop_assert!(loop_dist(&iw.c.mul(&iw.bplus), &a) < 1e-8);
        prop_assert!(loop_dist(&iw.c.mul(&iw.bminus), &b) < 1e-8);
    }
}
