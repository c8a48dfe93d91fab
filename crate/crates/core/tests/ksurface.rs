use lpfg::analysis::geometry::fundamental_forms;
use lpfg::analysis::ksurf::{omega_pseud_alt, reference_first_form, reference_k_surface};
use lpfg::analysis::sine_gordon::{dual_solution, sine_gordon_residual};
use lpfg::analysis::{jacobi, JacobiKind};
use lpfg::frames::{build_frame_grid, GridMode, GridSpec};
use lpfg::potentials::{angle_function, catalog_potential, AngleKind, CatalogName, CatalogParams};
use lpfg::sym::{sym_formula, SurfaceSample, SymVariant};
use lpfg::C64;
use rand::{Rng, SeedableRng};

const N: i32 = 32;

fn kinds() -> [AngleKind; 3] {
    [AngleKind::Pseud, AngleKind::Hyper { b: 0.5 }, AngleKind::Conic { b: 0.5 }]
}

fn conic_surface(nodes: usize, half_width: f64) -> SurfaceSample {
    let p = catalog_potential(CatalogName::TodaConic, CatalogParams { m: None, b: Some(0.5) }, N).unwrap();
    let g = GridSpec::square(GridMode::Para, 1, nodes, half_width).unwrap();
    let f = build_frame_grid(&p, &g, N).unwrap();
    sym_formula(&f, SymVariant::KSurface, C64::new(1.0, 0.0)).unwrap()
}

#[test]
fn toda_conic_k_surface_has_curvature_minus_one() {
    let s = conic_surface(21, 0.5);
    let ff = fundamental_forms(&s).unwrap();
    let (mut k_err, mut len_err, mut f_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut checked = 0;
    for (i, n) in ff.nodes.iter().enumerate() {
        let Some(n) = n else { continue };
        let p = s.grid.point(i);
        let (omega, _, _) = angle_function(AngleKind::Conic { b: 0.5 }, p[0], p[1]).unwrap();
        len_err = len_err.max((n.first[0].sqrt() - 1.0).abs()).max((n.first[2].sqrt() - 1.0).abs());
        f_err = f_err.max((n.first[1] - omega.cos()).abs());
        // the metric degenerates on x = y, where ω = π
        if (p[0] - p[1]).abs() > 1e-9 {
            k_err = k_err.max((n.gauss + 1.0).abs());
            checked += 1;
        }
    }
    eprintln!("conic K-surface: K {k_err:e} over {checked} nodes, |φ_x|,|φ_y| {len_err:e}, F {f_err:e}, degenerate {:?}", ff.degenerate.len());
    assert!(checked > 300);
    assert!(k_err < 1e-3);
    assert!(len_err < 1e-5);
    assert!(f_err < 1e-5);
}

#[test]
fn reference_surfaces_have_the_expected_first_forms() {
    let g = GridSpec::square(GridMode::Para, 1, 21, 0.5).unwrap();
    for kind in kinds() {
        let points = (0..g.len()).map(|i| {
            let p = g.point(i);
            reference_k_surface(kind, p[0], p[1]).ok()
        });
        let s = SurfaceSample {
            grid: g.clone(),
            points: points.collect(),
            signature: lpfg::sym::Signature::Euclidean,
            variant: SymVariant::KSurface,
            eval_parameter: [1.0, 0.0],
            potential_id: format!("{kind:?}"),
        };
        assert_eq!(s.valid_count(), g.len());
        let ff = fundamental_forms(&s).unwrap();
        let mut worst: f64 = 0.0;
        for (i, n) in ff.nodes.iter().enumerate() {
            let Some(n) = n else { continue };
            let p = g.point(i);
            let f = reference_first_form(kind, p[0], p[1]).unwrap();
            let (omega, _, _) = angle_function(kind, p[0], p[1]).unwrap();
            worst = worst.max((n.first[0] - 1.0).abs()).max((n.first[2] - 1.0).abs()).max((n.first[1] - f).abs());
            // the closed-form coefficient and cos ω are the same function
            assert!((f - omega.cos()).abs() < 1e-10, "{kind:?} at {p:?}");
        }
        eprintln!("{kind:?}: first form {worst:e}");
        assert!(worst < 1e-6);
    }
}

#[test]
fn reference_and_pipeline_conic_surfaces_are_congruent() {
    // equal first forms and K = −1 do not pin the surface down, but pairwise
    // distances between sample points are invariant under rigid motions
    let s = conic_surface(9, 0.4);
    let pts: Vec<([f64; 3], [f64; 3])> = (0..s.grid.len())
        .map(|i| {
            let p = s.grid.point(i);
            (s.points[i].unwrap(), reference_k_surface(AngleKind::Conic { b: 0.5 }, p[0], p[1]).unwrap())
        })
        .collect();
    let dist = |a: &[f64; 3], b: &[f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let mut worst: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            worst = worst.max((dist(&pts[i].0, &pts[j].0) - dist(&pts[i].1, &pts[j].1)).abs());
        }
    }
    eprintln!("pairwise distance mismatch {worst:e}");
    assert!(worst < 1e-8);
}

#[test]
fn jacobi_identities_at_random_arguments() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let u = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let k = if rng.gen_bool(0.5) { C64::new(rng.gen_range(0.0..0.95), 0.0) } else { C64::new(0.0, rng.gen_range(0.0..2.0)) };
        let sn = jacobi(JacobiKind::Sn, u, k).unwrap();
        let cn = jacobi(JacobiKind::Cn, u, k).unwrap();
        let dn = jacobi(JacobiKind::Dn, u, k).unwrap();
        let scale = 1.0 + sn.norm_sqr() + cn.norm_sqr() + dn.norm_sqr();
        worst = worst.max((sn * sn + cn * cn - 1.0).norm() / scale);
        worst = worst.max((k * k * sn * sn + dn * dn - 1.0).norm() / scale);
    }
    eprintln!("jacobi identities {worst:e}");
    assert!(worst < 1e-10);
}

#[test]
fn pseudosphere_angle_has_the_arctangent_form() {
    let mut worst: f64 = 0.0;
    for i in -10..=10 {
        for j in -10..=10 {
            let (x, y) = (0.08 * i as f64, 0.08 * j as f64);
            let (w, _, _) = angle_function(AngleKind::Pseud, x, y).unwrap();
            worst = worst.max((w - omega_pseud_alt(x, y)).abs());
        }
    }
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn angle_functions_solve_sine_gordon() {
    let g = GridSpec::square(GridMode::Para, 1, 21, 0.8).unwrap();
    for kind in kinds() {
        let omega = move |x: f64, y: f64| Ok(angle_function(kind, x, y)?.0);
        let r = sine_gordon_residual(omega, &g).unwrap();
        let rd = sine_gordon_residual(dual_solution(omega), &g).unwrap();
        eprintln!("{kind:?}: sine-Gordon {r:e}, dual {rd:e}");
        assert!(r < 1e-6 && rd < 1e-6);
    }
}
