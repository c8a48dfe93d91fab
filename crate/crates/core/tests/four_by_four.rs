use std::time::Instant;

use lpfg::algebra::{c64, Mat};
use lpfg::frames::{build_frame_grid, check_flatness, frame_at, mc_band_shape, morph_frame, GridMode, GridSpec};
use lpfg::potentials::{catalog_potential, CatalogName, CatalogParams};
use lpfg::C64;

const N: i32 = 32;
const THETAS: [f64; 3] = [0.5, 1.0, 2.0];

/// [[cos, 0, 0, sin], [0, cosh, sinh, 0], [0, sinh, cosh, 0], [−sin, 0, 0, cos]]
fn grassmann_block(a: C64, b: C64) -> Mat {
    let z = C64::new(0.0, 0.0);
    Mat::from_rows(&[
        [a.cos(), z, z, a.sin()],
        [z, b.cosh(), b.sinh(), z],
        [z, b.sinh(), b.cosh(), z],
        [-a.sin(), z, z, a.cos()],
    ])
}

/// [[cosh, s·sinh, 0, 0], [s·sinh, cosh, 0, 0], [0, 0, cosh, −s·sinh], [0, 0, −s·sinh, cosh]]
fn sp2_block(t: C64, s: f64) -> Mat {
    let z = C64::new(0.0, 0.0);
    let (c, h) = (t.cosh(), t.sinh() * s);
    Mat::from_rows(&[[c, h, z, z], [h, c, z, z], [z, z, c, -h], [z, z, -h, c]])
}

fn grassmann_c(th: C64, x: &[C64]) -> Mat {
    grassmann_block(x[0] / th + th * x[2], x[1] / th - th * x[3])
}

fn sp2_c(th: C64, x: &[C64]) -> Mat {
    sp2_block((x[0] - th * th * x[2]) / th, 1.0)
}

fn grid_worst(name: CatalogName, closed: fn(C64, &[C64]) -> Mat) -> f64 {
    let p = catalog_potential(name, CatalogParams::default(), N).unwrap();
    let g = GridSpec::square(GridMode::Para, 2, 5, 0.8).unwrap();
    let t = Instant::now();
    let f = build_frame_grid(&p, &g, N).unwrap();
    eprintln!("{}: 5^4 grid in {:?}", p.id, t.elapsed());
    assert!(f.failures.is_empty());
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let x: Vec<C64> = g.point(idx).iter().map(|&v| c64(v, 0.0)).collect();
        for th in THETAS {
            let th = c64(th, 0.0);
            worst = worst.max(f.get(idx).unwrap().eval(th).unwrap().dist(&closed(th, &x)));
        }
    }
    worst
}

#[test]
fn grassmann_frame_matches_closed_form() {
    let w = grid_worst(CatalogName::Grassmann4, grassmann_c);
    eprintln!("grassmann C {w:e}");
    assert!(w < 1e-8);
}

#[test]
fn sp2_frame_matches_closed_form() {
    let w = grid_worst(CatalogName::Sp2, sp2_c);
    eprintln!("sp2 C {w:e}");
    assert!(w < 1e-8);
}

#[test]
fn split_factors_match_closed_forms() {
    let gr = catalog_potential(CatalogName::Grassmann4, CatalogParams::default(), N).unwrap();
    let sp = catalog_potential(CatalogName::Sp2, CatalogParams::default(), N).unwrap();
    let mut worst: f64 = 0.0;
    for pt in [[0.3, -0.2, 0.5, 0.1], [-0.6, 0.4, -0.1, -0.7], [0.8, 0.8, -0.8, 0.8]] {
        let x: Vec<C64> = pt.iter().map(|&v| c64(v, 0.0)).collect();
        let g = frame_at(&gr, GridMode::Para, &pt, N).unwrap();
        let s = frame_at(&sp, GridMode::Para, &pt, N).unwrap();
        // B⁺ on the closed unit disk and B⁻ outside it; off its own side the band's
        // round-off is amplified by |θ|^±N
        let sides = [(0.5, true), (1.0, true), (1.0, false), (2.0, false)];
        for (th, plus) in sides {
            let t = c64(th, 0.0);
            let (gf, sf) = if plus { (&g.bplus, &s.bplus) } else { (&g.bminus, &s.bminus) };
            // the Grassmann factors are the inverses of the opposite-side solutions
            let g_want = if plus { grassmann_block(-t * x[2], t * x[3]) } else { grassmann_block(-x[0] / t, -x[1] / t) };
            // Sp(2) cosh/sinh blocks
            let s_want = if plus { sp2_block(t * (x[1] - x[2]), -1.0) } else { sp2_block((x[0] - x[3]) / t, -1.0) };
            worst = worst.max(gf.eval(t).unwrap().dist(&g_want));
            worst = worst.max(sf.eval(t).unwrap().dist(&s_want));
        }
    }
    eprintln!("split factors {worst:e}");
    assert!(worst < 1e-8);
}

#[test]
fn morphed_frames_are_the_substituted_closed_forms() {
    // z^a = x^a + i·y^a with the grid laid out as (Re z¹, Re z², Im z¹, Im z²)
    let g = GridSpec::square(GridMode::Morphed, 2, 3, 0.4).unwrap();
    for (name, closed) in [(CatalogName::Grassmann4, grassmann_c as fn(C64, &[C64]) -> Mat), (CatalogName::Sp2, sp2_c)] {
        let p = catalog_potential(name, CatalogParams::default(), N).unwrap();
        let f = morph_frame(&p, &g, N).unwrap();
        let mut worst: f64 = 0.0;
        let mut unitary: f64 = 0.0;
        for idx in 0..g.len() {
            let q = g.point(idx);
            let z = [c64(q[0], q[2]), c64(q[1], q[3])];
            let args = [z[0], z[1], z[0].conj(), z[1].conj()];
            for k in 0..8 {
                let lam = C64::from_polar(1.0, 0.4 + k as f64 * 0.785);
                let c = f.get(idx).unwrap().eval(lam).unwrap();
                worst = worst.max(c.dist(&closed(lam, &args)));
                unitary = unitary.max((c.adjoint() * c).dist(&Mat::identity(4)));
            }
        }
        eprintln!("{name:?}: morphed {worst:e}, unitarity {unitary:e}");
        assert!(worst < 1e-8 && unitary < 1e-8);
    }
}

#[test]
fn four_by_four_frames_are_flat() {
    for name in [CatalogName::Grassmann4, CatalogName::Sp2] {
        let p = catalog_potential(name, CatalogParams::default(), N).unwrap();
        let f = build_frame_grid(&p, &GridSpec::square(GridMode::Para, 2, 5, 0.2).unwrap(), N).unwrap();
        let flat = check_flatness(&f);
        let shape = mc_band_shape(&f, 7);
        eprintln!("{}: flatness {flat:e}, band {shape:?}", p.id);
        assert!(flat < 1e-6);
        assert!(shape.wrong_component < 1e-6 && shape.outside_band < 1e-4);
    }
}
