use lpfg::analysis::metric::{extract_metric, fit_qr, gauss_equation_residual, painleve_iii_residual};
use lpfg::frames::{build_frame_grid, Axis, GridMode, GridSpec};
use lpfg::potentials::{catalog_potential, CatalogName, CatalogParams};

const N: i32 = 32;

fn smyth_grid() -> GridSpec {
    // first quadrant plus a margin, h = 0.05
    GridSpec::new(GridMode::Para, vec![Axis { min: -0.2, max: 1.0, nodes: 25 }; 2]).unwrap()
}

fn ts() -> Vec<f64> {
    (0..12).map(|k| 0.05 + 0.25 * k as f64 / 11.0).collect()
}

#[test]
fn smyth_metric_gauss_and_painleve() {
    for m in [1u32, 2] {
        let p = catalog_potential(CatalogName::Smyth, CatalogParams { m: Some(m), b: None }, N).unwrap();
        let g = smyth_grid();
        let f = build_frame_grid(&p, &g, N).unwrap();
        assert!(f.failures.is_empty());
        let md = extract_metric(&f).unwrap();
        let (q0, r0, fit) = fit_qr(&md, m);
        let gauss = gauss_equation_residual(&md);
        let pr = painleve_iii_residual(&md, m, &ts()).unwrap();
        eprintln!(
            "smyth {m}: H {} consistency {:e} (shape {:e}) fit {fit:e} Q0 {q0} R0 {r0} gauss {gauss:e} painleve {:e} / {:e} x-indep {:e} anchors {:?}",
            md.h, md.consistency, md.shape_residual, pr.residual, pr.residual_t, pr.x_independence, pr.anchors
        );
        assert!(md.consistency < 1e-4);
        assert!(fit < 1e-4);
        assert!(gauss < 1e-4);
        assert!(pr.residual < 1e-3 && pr.residual_t < 1e-3);
        assert!(pr.x_independence < 1e-4);

        // u is the log of the λ-constant part of the split, up to the factor 4
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            if let (Some(u), Some(h)) = (md.u(i), f.plus_constants[i].as_ref()) {
                worst = worst.max((u.re - 4.0 * h[(0, 0)].re.ln()).abs() + u.im.abs());
            }
        }
        eprintln!("  u against the split constant {worst:e}");
        assert!(worst < 1e-6);

        // u(ax, y/a) = u(x, y) on node pairs (2 steps, 8 steps) ↔ (8 steps, 2 steps) etc.
        let mut inv: f64 = 0.0;
        for (a, b) in [((2usize, 8usize), (8usize, 2usize)), ((3, 8), (6, 4)), ((12, 2), (4, 6)), ((1, 20), (4, 5))] {
            let ia = g.flat_index(&[4 + a.0, 4 + a.1]);
            let ib = g.flat_index(&[4 + b.0, 4 + b.1]);
            inv = inv.max((md.u(ia).unwrap() - md.u(ib).unwrap()).norm());
        }
        eprintln!("  scaling invariance of u {inv:e}");
        assert!(inv < 1e-5);
    }
}

#[test]
fn every_sl2_para_entry_satisfies_its_gauss_equation() {
    use CatalogName::*;
    for (name, m, b) in [
        (Cylinder, None, None),
        (Hyperboloid, None, None),
        (SphereVariant, None, None),
        (Smyth, Some(1), None),
        (Smyth, Some(3), None),
        (TodaPseud, None, None),
        (TodaHyper, None, Some(0.5)),
        (TodaConic, None, Some(0.5)),
    ] {
        let p = catalog_potential(name, CatalogParams { m, b }, N).unwrap();
        let g = GridSpec::square(GridMode::Para, 1, 21, 0.5).unwrap();
        let f = build_frame_grid(&p, &g, N).unwrap();
        let md = extract_metric(&f).unwrap();
        let gauss = gauss_equation_residual(&md);
        eprintln!("{}: H {} consistency {:e} gauss {gauss:e}", p.id, md.h, md.consistency);
        assert!(md.consistency < 1e-4, "{}", p.id);
        assert!(gauss < 1e-4, "{}", p.id);
    }
}

#[test]
fn cylinder_metric_is_constant() {
    let p = catalog_potential(CatalogName::Cylinder, CatalogParams::default(), N).unwrap();
    let g = GridSpec::square(GridMode::Para, 1, 11, 0.5).unwrap();
    let md = extract_metric(&build_frame_grid(&p, &g, N).unwrap()).unwrap();
    let q0 = md.q[g.base_index()].unwrap();
    let r0 = md.r[g.base_index()].unwrap();
    for i in 0..g.len() {
        assert!((md.u(i).unwrap()).norm() < 1e-8);
        assert!((md.q[i].unwrap() - q0).norm() < 1e-8);
        assert!((md.r[i].unwrap() - r0).norm() < 1e-8);
    }
    // constant coefficients balance: 2QR = H²/2
    assert!((2.0 * q0 * r0 - 0.5 * md.h * md.h).norm() < 1e-8);
    assert!(gauss_equation_residual(&md) < 1e-6);
}
