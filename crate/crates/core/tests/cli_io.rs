use std::process::Command;

use lpfg::algebra::c64;
use lpfg::cli_io::cache::{read_frame_cache, write_frame_cache};
use lpfg::cli_io::{
    execute, export_surface, parse_spec, run_verification_suite, ExportFormat, OutputFormat, OutputSpec, Pipeline,
    PotentialRef, RunSpec,
};
use lpfg::frames::{build_frame_grid, Axis, GridMode, GridSpec};
use lpfg::potentials::{catalog_potential, CatalogName, CatalogParams};
use lpfg::sym::{Signature, SurfaceSample, SymVariant};
use lpfg::Error;
use proptest::prelude::*;

fn lines_starting(bytes: &[u8], prefix: &str) -> usize {
    String::from_utf8(bytes.to_vec()).unwrap().lines().filter(|l| l.starts_with(prefix)).count()
}

#[test]
fn documented_examples_parse() {
    let s = parse_spec(r#"{"potential":{"catalog":"cylinder"},"pipeline":"SURFACE","sym_variant":"R31_TIMELIKE"}"#).unwrap();
    assert_eq!(s.pipeline, Pipeline::Surface);
    assert_eq!(s.sym_variant, Some(SymVariant::R31Timelike));
    match parse_spec(r#"{"potential":{"catalog":"smyth","params":{"m":0}}}"#) {
        Err(Error::Spec { pointer, .. }) => assert_eq!(pointer, "/potential/params/m"),
        other => panic!("{other:?}"),
    }
    let s = parse_spec(r#"{"potential":{"catalog":"toda_conic","params":{"b":0.5}},"pipeline":"VERIFY"}"#).unwrap();
    assert_eq!(s.potential.params.unwrap().b, Some(0.5));
}

#[test]
fn malformed_json_is_a_spec_error() {
    assert!(matches!(parse_spec("{\"potential\":"), Err(Error::Spec { .. })));
    assert!(matches!(parse_spec(r#"{"potential":{"catalog":"cylinder"}} x"#), Err(Error::Spec { .. })));
}

#[test]
fn custom_potential_reproduces_the_cylinder() {
    // η = σ₁λ⁻¹dx, τ = −σ₁λdy with the cylinder's involutions
    let doc = r#"{
        "potential": {"custom": {
            "group": "SL2C",
            "involutions": {
                "sigma": {"conjugate_by": [[[-1, 0], [0, 0]], [[0, 0], [1, 0]]]},
                "nu1": "inverse_conjugate_transpose",
                "nu2": "entrywise_conjugate"
            },
            "eta": [[{"power": -1, "entries": [[[], [[1, 0]]], [[[1, 0]], []]]}]],
            "tau": [[{"power": 1, "entries": [[[], [[-1, 0]]], [[[-1, 0]], []]]}]]
        }},
        "grid": {"mode": "PARA", "axes": [{"min": -0.5, "max": 0.5, "nodes": 5}, {"min": -0.5, "max": 0.5, "nodes": 5}]}
    }"#;
    let spec = parse_spec(doc).unwrap();
    let custom = execute(&spec).unwrap().frame.unwrap();
    let p = catalog_potential(CatalogName::Cylinder, CatalogParams::default(), 32).unwrap();
    let reference = build_frame_grid(&p, &custom.grid, 32).unwrap();
    for i in 0..custom.grid.len() {
        for th in [0.5, 1.0, 2.0] {
            let a = custom.get(i).unwrap().eval(c64(th, 0.0)).unwrap();
            let b = reference.get(i).unwrap().eval(c64(th, 0.0)).unwrap();
            // polynomial data go through the adaptive integrator, constant loops through exp
            assert!(a.dist(&b) < 1e-10, "{:e}", a.dist(&b));
        }
    }
    // twist parity is enforced on custom data
    let bad = doc.replace(r#""power": -1"#, r#""power": -2"#);
    assert!(matches!(parse_spec(&bad), Err(Error::Spec { pointer, .. }) if pointer == "/potential/custom"));
}

fn sample(nx: usize, ny: usize, missing: &[usize]) -> SurfaceSample {
    let grid = GridSpec::new(GridMode::Para, vec![Axis { min: 0.0, max: 1.0, nodes: nx }, Axis { min: 0.0, max: 1.0, nodes: ny }]).unwrap();
    let points = (0..grid.len())
        .map(|i| {
            let p = grid.point(i);
            (!missing.contains(&i)).then_some([p[0], p[1], p[0] * p[1]])
        })
        .collect();
    SurfaceSample {
        grid,
        points,
        signature: Signature::Lorentz1,
        variant: SymVariant::R31Timelike,
        eval_parameter: [1.0, 0.0],
        potential_id: "test".into(),
    }
}

#[test]
fn obj_counts() {
    let obj = export_surface(&sample(2, 2, &[]), ExportFormat::Obj).unwrap();
    assert_eq!((lines_starting(&obj, "v "), lines_starting(&obj, "f ")), (4, 1));
    // one missing interior node removes the four quads around it
    let s = sample(3, 3, &[4]);
    let obj = export_surface(&s, ExportFormat::Obj).unwrap();
    assert_eq!((lines_starting(&obj, "v "), lines_starting(&obj, "f ")), (8, 0));
    let s = sample(3, 4, &[0]);
    let obj = export_surface(&s, ExportFormat::Obj).unwrap();
    assert_eq!((lines_starting(&obj, "v "), lines_starting(&obj, "f ")), (11, 5));
    let text = String::from_utf8(obj).unwrap();
    assert!(text.contains("# potential: test") && text.contains("# variant: R31_TIMELIKE") && text.contains("Lorentzian"));
    // faces refer to existing vertices only
    for l in text.lines().filter(|l| l.starts_with("f ")) {
        assert!(l[2..].split(' ').all(|v| (1..=11).contains(&v.parse::<usize>().unwrap())));
    }
}

#[test]
fn csv_layout() {
    let csv = String::from_utf8(export_surface(&sample(2, 3, &[1]), ExportFormat::Csv).unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x_param,y_param,X,Y,Z");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1], "0.0,0.0,0.0,0.0,0.0");
}

#[test]
fn empty_surface_has_nothing_to_export() {
    let s = sample(2, 2, &[0, 1, 2, 3]);
    assert_eq!(export_surface(&s, ExportFormat::Obj), Err(Error::NothingToExport));
    assert_eq!(export_surface(&s, ExportFormat::Csv), Err(Error::NothingToExport));
}

#[test]
fn cylinder_export_is_deterministic() {
    let spec = parse_spec(r#"{"potential":{"catalog":"cylinder"},"pipeline":"SURFACE","sym_variant":"R31_TIMELIKE"}"#).unwrap();
    let a = export_surface(execute(&spec).unwrap().surface.as_ref().unwrap(), ExportFormat::Obj).unwrap();
    let b = export_surface(execute(&spec).unwrap().surface.as_ref().unwrap(), ExportFormat::Obj).unwrap();
    assert_eq!((lines_starting(&a, "v "), lines_starting(&a, "f ")), (441, 400));
    assert_eq!(a, b);
}

#[test]
fn frame_cache_round_trip() {
    for (name, params, mode) in [
        (CatalogName::Hyperboloid, CatalogParams::default(), GridMode::Para),
        (CatalogName::Smyth, CatalogParams { m: Some(2), b: None }, GridMode::Morphed),
        (CatalogName::Sp2, CatalogParams::default(), GridMode::Para),
    ] {
        let mut spec = RunSpec::new(PotentialRef::catalog(name, params), if mode == GridMode::Para { Pipeline::Frame } else { Pipeline::Morph });
        spec.set_grid_shorthand(if name == CatalogName::Sp2 { "3x3@0.4" } else { "7x7@1.2" }).unwrap();
        let frame = execute(&spec).unwrap().frame.unwrap();
        let bytes = write_frame_cache(&frame);
        assert_eq!(&bytes[..5], b"LPFG1");
        let back = read_frame_cache(&bytes).unwrap();
        assert_eq!(back.grid, frame.grid);
        assert_eq!(back.loops, frame.loops);
        assert_eq!(back.plus_constants, frame.plus_constants);
        assert_eq!(back.failures, frame.failures);
        assert_eq!(back.space, frame.space);
        assert_eq!(write_frame_cache(&back), bytes);
        assert!(matches!(read_frame_cache(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    }
}

#[test]
fn subset_suites() {
    for name in ["SPECIAL_FUNCTIONS", "FACTORIZATION_PROPS", "MORPHING"] {
        let r = run_verification_suite(name, 32).unwrap();
        assert!(r.pass, "{}", r.to_text());
        assert!(!r.checks.is_empty());
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["checks"].as_array().unwrap().len(), r.checks.len());
    }
}

fn spec_strategy() -> impl Strategy<Value = RunSpec> {
    use CatalogName::*;
    let potential = prop_oneof![
        Just(PotentialRef::catalog(Cylinder, CatalogParams::default())),
        Just(PotentialRef::catalog(Hyperboloid, CatalogParams::default())),
        (1u32..=6).prop_map(|m| PotentialRef::catalog(Smyth, CatalogParams { m: Some(m), b: None })),
        (0.05f64..0.95).prop_map(|b| PotentialRef::catalog(TodaConic, CatalogParams { m: None, b: Some(b) })),
        (0.05f64..0.95).prop_map(|b| PotentialRef::catalog(TodaHyper, CatalogParams { m: None, b: Some(b) })),
    ];
    let variant = prop_oneof![Just(None), proptest::sample::select(SymVariant::ALL.to_vec()).prop_map(Some)];
    let grid = proptest::option::of((1usize..15, 1usize..15, 0.01f64..3.0));
    (potential, 8i32..=128, 0usize..4, variant, grid, proptest::bool::ANY).prop_map(|(potential, band, pl, variant, grid, out)| {
        let pipeline = [Pipeline::Frame, Pipeline::Morph, Pipeline::Surface, Pipeline::Verify][pl];
        let sym_variant = if pipeline == Pipeline::Surface { Some(variant.unwrap_or(SymVariant::R3Cmc)) } else { variant };
        let mut spec = RunSpec { potential, grid: None, band, pipeline, sym_variant, outputs: Vec::new() };
        if let Some((a, b, hw)) = grid {
            spec.grid = Some(GridSpec::new(spec.mode(), vec![Axis::symmetric(hw, 2 * a + 1), Axis::symmetric(hw, 2 * b + 1)]).unwrap());
        }
        if out {
            let format = if pipeline == Pipeline::Verify { OutputFormat::Text } else { OutputFormat::Json };
            spec.outputs.push(OutputSpec { path: "out/x".into(), format });
        }
        spec
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn run_specs_round_trip(spec in spec_strategy()) {
        let back = parse_spec(&spec.to_json()).unwrap();
        prop_assert_eq!(back, spec);
    }
}

fn lpfg(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lpfg")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn binary_exit_codes_and_outputs() {
    let dir = std::env::temp_dir().join(format!("lpfg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let good = write("cyl.json", r#"{"potential":{"catalog":"cylinder"}}"#);
    let bad = write("bad.json", r#"{"potential":{"catalog":"smyth","params":{"m":0}}}"#);
    let pseud = write("pseud.json", r#"{"potential":{"catalog":"toda_pseud"}}"#);
    let obj = dir.join("cyl.obj").to_str().unwrap().to_string();
    let obj2 = dir.join("cyl2.obj").to_str().unwrap().to_string();

    assert_eq!(lpfg(&["surface", "--spec", &good, "--grid", "11x11@0.5", "--out", &obj2]).0, 2, "no sym variant");
    let spec_with_variant = write("cyl_s.json", r#"{"potential":{"catalog":"cylinder"},"sym_variant":"R31_TIMELIKE"}"#);
    assert_eq!(lpfg(&["surface", "--spec", &spec_with_variant, "--grid", "11x11@0.5", "--out", &obj2]).0, 0);
    let a = std::fs::read(&obj2).unwrap();
    assert_eq!(lines_starting(&a, "v "), 121);
    assert_eq!(lines_starting(&a, "f "), 100);
    assert_eq!(lpfg(&["surface", "--spec", &spec_with_variant, "--grid", "11x11@0.5", "--out", &obj]).0, 0);
    assert_eq!(std::fs::read(&obj).unwrap(), a);

    let cache = dir.join("cyl.lpfg").to_str().unwrap().to_string();
    assert_eq!(lpfg(&["frame", "--spec", &good, "--band", "16", "--out", &cache]).0, 0);
    let f = read_frame_cache(&std::fs::read(&cache).unwrap()).unwrap();
    assert_eq!((f.band, f.grid.len()), (16, 441));

    assert_eq!(lpfg(&["frame", "--spec", &bad]).0, 2);
    assert_eq!(lpfg(&["frame", "--spec", &good, "--band", "4"]).0, 2);
    assert_eq!(lpfg(&["frame", "--spec", &good, "--grid", "nonsense"]).0, 2);
    assert_eq!(lpfg(&["verify", "--suite", "NOPE"]).0, 2);
    // the pseudosphere potential cannot be morphed
    assert_eq!(lpfg(&["morph", "--spec", &pseud, "--grid", "5x5@0.3"]).0, 3);
    let report = dir.join("r.json").to_str().unwrap().to_string();
    let (code, stdout) = lpfg(&["verify", "--suite", "SPECIAL_FUNCTIONS", "--jobs", "1", "--out", &report]);
    assert_eq!(code, 0, "{stdout}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    let (code, stdout) = lpfg(&["verify", "--spec", &good, "--grid", "11x11@0.5"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("flatness: cylinder"));
    std::fs::remove_dir_all(&dir).ok();
}
