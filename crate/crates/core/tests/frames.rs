use std::time::Instant;

use lpfg::algebra::{c64, Mat};
use lpfg::frames::{build_frame_grid, integrate_frame, morph_frame, GridMode, GridSpec};
use lpfg::C64;
use lpfg::potentials::{catalog_potential, CatalogName, CatalogParams, Side};

const N: i32 = 32;

fn cylinder_closed(theta: C64, x: C64, y: C64) -> Mat {
    let s = x / theta - theta * y;
    Mat::from_rows(&[[s.cosh(), s.sinh()], [s.sinh(), s.cosh()]])
}

fn hyperboloid_closed(theta: C64, x: C64, y: C64) -> Mat {
    let r = (C64::new(1.0, 0.0) - x * y).sqrt().inv();
    let i = C64::i();
    Mat::from_rows(&[[r, r * i * x / theta], [-r * i * theta * y, r]])
}

#[test]
fn cylinder_axis_solution() {
    let p = catalog_potential(CatalogName::Cylinder, CatalogParams::default(), N).unwrap();
    let a = integrate_frame(&p, Side::Eta, &[vec![c64(0.0, 0.0)], vec![c64(0.3, 0.0)]], N).unwrap();
    for th in [0.5, 1.0, 2.0] {
        let want = cylinder_closed(c64(th, 0.0), c64(0.3, 0.0), c64(0.0, 0.0));
        assert!(a.eval(c64(th, 0.0)).unwrap().dist(&want) < 1e-12);
    }
}

#[test]
fn cylinder_grid_matches_closed_form() {
    let p = catalog_potential(CatalogName::Cylinder, CatalogParams::default(), N).unwrap();
    let g = GridSpec::square(GridMode::Para, 1, 21, 1.0).unwrap();
    let t = Instant::now();
    let f = build_frame_grid(&p, &g, N).unwrap();
    eprintln!("cylinder 21x21: {:?}", t.elapsed());
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let pt = g.point(idx);
        for th in [0.5, 1.0, 2.0] {
            let c = f.get(idx).unwrap().eval(c64(th, 0.0)).unwrap();
            worst = worst.max(c.dist(&cylinder_closed(c64(th, 0.0), c64(pt[0], 0.0), c64(pt[1], 0.0))));
        }
    }
    eprintln!("cylinder worst {worst:e}");
    assert!(worst < 1e-9);
}

#[test]
fn hyperboloid_grid_and_morph() {
    let p = catalog_potential(CatalogName::Hyperboloid, CatalogParams::default(), N).unwrap();
    let g = GridSpec::square(GridMode::Para, 1, 19, 0.9).unwrap();
    let t = Instant::now();
    let f = build_frame_grid(&p, &g, N).unwrap();
    eprintln!("hyperboloid 19x19: {:?} failures {}", t.elapsed(), f.failures.len());
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let pt = g.point(idx);
        for th in [0.5, 1.0, 2.0] {
            let c = f.get(idx).unwrap().eval(c64(th, 0.0)).unwrap();
            worst = worst.max(c.dist(&hyperboloid_closed(c64(th, 0.0), c64(pt[0], 0.0), c64(pt[1], 0.0))));
        }
    }
    eprintln!("hyperboloid worst {worst:e}");
    assert!(worst < 1e-9);
    let gm = GridSpec::square(GridMode::Morphed, 1, 13, 0.6).unwrap();
    let fm = morph_frame(&p, &gm, N).unwrap();
    let mut worst: f64 = 0.0;
    for idx in 0..gm.len() {
        let pt = gm.point(idx);
        let z = c64(pt[0], pt[1]);
        for mu in lpfg::loops::circle_samples() {
            let c = fm.get(idx).unwrap().eval(mu).unwrap();
            worst = worst.max(c.dist(&hyperboloid_closed(mu, z, z.conj())));
        }
    }
    eprintln!("hyperboloid morph worst {worst:e}");
    assert!(worst < 1e-9);
}

#[test]
fn morphed_integration_is_path_independent() {
    // the grid integrates along 0 → Re z → z; holomorphic data give the same
    // result along the straight segment
    for (name, params) in [
        (CatalogName::Smyth, CatalogParams { m: Some(2), b: None }),
        (CatalogName::TodaConic, CatalogParams { m: None, b: Some(0.5) }),
        (CatalogName::Hyperboloid, CatalogParams::default()),
    ] {
        let p = catalog_potential(name, params, N).unwrap();
        let mut worst: f64 = 0.0;
        for z in [c64(0.3, 0.25), c64(-0.2, 0.35), c64(0.1, -0.4)] {
            for side in [Side::Eta, Side::Tau] {
                let w = if side == Side::Eta { z } else { z.conj() };
                let o = c64(0.0, 0.0);
                let straight = integrate_frame(&p, side, &[vec![o], vec![w]], N).unwrap();
                let bent = integrate_frame(&p, side, &[vec![o], vec![c64(w.re, 0.0)], vec![w]], N).unwrap();
                for mu in [c64(1.0, 0.0), C64::from_polar(1.0, 2.0), c64(0.5, 0.0)] {
                    worst = worst.max(straight.eval(mu).unwrap().dist(&bent.eval(mu).unwrap()));
                }
            }
        }
        eprintln!("{}: path dependence {worst:e}", p.id);
        assert!(worst < 1e-10);
    }
}
