//! Run specs, exports, the frame cache and the verification suite: everything
//! the `lpfg` binary needs beyond the numerics.
//!
//! A run spec is a JSON document:
//!
//! ```json
//! {
//!   "potential": {"catalog": "smyth", "params": {"m": 2}},
//!   "grid": {"mode": "PARA", "axes": [{"min": -1, "max": 1, "nodes": 21},
//!                                     {"min": -1, "max": 1, "nodes": 21}]},
//!   "band": 32,
//!   "pipeline": "SURFACE",
//!   "sym_variant": "R31_TIMELIKE",
//!   "outputs": [{"path": "smyth.obj", "format": "OBJ"}]
//! }
//! ```
//!
//! Only `potential` is required. `band` defaults to 32, `pipeline` to FRAME and
//! the grid to 21 nodes per axis on [−1, 1], in the mode the pipeline needs.
//! Instead of a catalog entry, `potential` may hold
//! `{"custom": {"group", "involutions": {"sigma", "nu1", "nu2"}, "eta", "tau"}}`
//! where `eta` and `tau` list, per coordinate, λ-power terms
//! `{"power": k, "entries": [[[[re, im], ...], ...], ...]}` whose entries are
//! polynomial coefficients by ascending degree.

pub mod cache;
pub mod export;
pub mod suite;

use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{GroupSpec, Involution, Mat, SymmetricSpaceSpec};
use crate::error::{Error, Result};
use crate::frames::{build_frame_grid, morph_frame, unitarize, Axis, ExtendedFrame, GridMode, GridSpec};
use crate::potentials::{catalog_potential, CatalogName, CatalogParams, CoefFn, PolyTerm, PotentialPair};
use crate::sym::{sym_formula, SurfaceSample, SymVariant, SYM_REALITY_TOL};

pub use export::{export_surface, ExportFormat};
pub use suite::{run_verification_suite, Check, VerificationReport};

pub const DEFAULT_BAND: i32 = 32;
pub const BAND_RANGE: RangeInclusive<i32> = 8..=128;
pub const DEFAULT_NODES: usize = 21;
pub const DEFAULT_HALF_WIDTH: f64 = 1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pipeline {
    #[default]
    Frame,
    Morph,
    Surface,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OutputFormat {
    Obj,
    Csv,
    Json,
    Text,
    /// binary frame cache
    Lpfg1,
}

impl OutputFormat {
    /// Guess from a file extension (`.obj`, `.csv`, `.json`, `.txt`, `.lpfg`).
    pub fn from_path(path: &str) -> Option<Self> {
        let ext = std::path::Path::new(path).extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "csv" => Some(Self::Csv),
            "json" => Some(Self::Json),
            "txt" => Some(Self::Text),
            "lpfg" | "lpfg1" => Some(Self::Lpfg1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    pub format: OutputFormat,
}

/// A complex number as `[re, im]`.
pub type JsonC64 = [f64; 2];

fn c(v: JsonC64) -> C64 {
    C64::new(v[0], v[1])
}

fn matrix_from_json(rows: &[Vec<JsonC64>]) -> Result<Mat> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidParams("matrix must be square and non-empty".into()));
    }
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().copied().map(c).collect()).collect();
    Ok(Mat::from_rows(&rows))
}

fn matrix_to_json(m: &Mat) -> Vec<Vec<JsonC64>> {
    (0..m.dim()).map(|i| m.row(i).into_iter().map(|z| [z.re, z.im]).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvolutionSpec {
    ConjugateBy(Vec<Vec<JsonC64>>),
    EntrywiseConjugate,
    InverseConjugateTranspose,
    Compose(Vec<InvolutionSpec>),
}

impl InvolutionSpec {
    pub fn to_involution(&self) -> Result<Involution> {
        Ok(match self {
            Self::ConjugateBy(k) => Involution::ConjugateBy(matrix_from_json(k)?),
            Self::EntrywiseConjugate => Involution::EntrywiseConjugate,
            Self::InverseConjugateTranspose => Involution::InverseConjugateTranspose,
            Self::Compose(parts) => Involution::Compose(parts.iter().map(Self::to_involution).collect::<Result<_>>()?),
        })
    }

    pub fn from_involution(inv: &Involution) -> Self {
        match inv {
            Involution::ConjugateBy(k) => Self::ConjugateBy(matrix_to_json(k)),
            Involution::EntrywiseConjugate => Self::EntrywiseConjugate,
            Involution::InverseConjugateTranspose => Self::InverseConjugateTranspose,
            Involution::Compose(parts) => Self::Compose(parts.iter().map(Self::from_involution).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub sigma: InvolutionSpec,
    pub nu1: InvolutionSpec,
    pub nu2: InvolutionSpec,
}

impl SpaceSpec {
    pub fn from_space(s: &SymmetricSpaceSpec) -> Self {
        SpaceSpec {
            sigma: InvolutionSpec::from_involution(&s.sigma),
            nu1: InvolutionSpec::from_involution(&s.nu1),
            nu2: InvolutionSpec::from_involution(&s.nu2),
        }
    }

    pub fn to_space(&self, group: GroupSpec) -> Result<SymmetricSpaceSpec> {
        SymmetricSpaceSpec::new(group, self.sigma.to_involution()?, self.nu1.to_involution()?, self.nu2.to_involution()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTermSpec {
    pub power: i32,
    pub entries: Vec<Vec<Vec<JsonC64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPotential {
    pub group: GroupSpec,
    pub involutions: SpaceSpec,
    pub eta: Vec<Vec<PolyTermSpec>>,
    pub tau: Vec<Vec<PolyTermSpec>>,
    /// coefficients are evaluated for |w| up to this in every coordinate (default 1)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl CustomPotential {
    pub fn build(&self) -> Result<PotentialPair> {
        let coef = |terms: &Vec<PolyTermSpec>| {
            CoefFn::PolyEntry(
                terms
                    .iter()
                    .map(|t| PolyTerm {
                        power: t.power,
                        entries: t.entries.iter().map(|row| row.iter().map(|p| p.iter().copied().map(c).collect()).collect()).collect(),
                    })
                    .collect(),
            )
        };
        let half_width = self.half_width.unwrap_or(DEFAULT_HALF_WIDTH);
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParams("half_width must be positive".into()));
        }
        let p = PotentialPair {
            id: "custom".into(),
            space: self.involutions.to_space(self.group)?,
            n: self.eta.len(),
            eta: self.eta.iter().map(coef).collect(),
            tau: self.tau.iter().map(coef).collect(),
            analytic: true,
            half_width,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Either `{"catalog": name, "params": {...}}` or `{"custom": {...}}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<CatalogParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomPotential>,
}

impl PotentialRef {
    pub fn catalog(name: CatalogName, params: CatalogParams) -> Self {
        PotentialRef { catalog: Some(name), params: Some(params), custom: None }
    }

    pub fn build(&self, band: i32) -> Result<PotentialPair> {
        let spec_err = |pointer: &str, e: Error| Error::Spec { pointer: pointer.into(), message: e.to_string() };
        match (&self.catalog, &self.custom) {
            (Some(name), None) => catalog_potential(*name, self.params.unwrap_or_default(), band).map_err(|e| {
                let ptr = match name {
                    CatalogName::Smyth => "/potential/params/m",
                    CatalogName::TodaHyper | CatalogName::TodaConic => "/potential/params/b",
                    _ => "/potential/params",
                };
                spec_err(ptr, e)
            }),
            (None, Some(custom)) => {
                if self.params.is_some() {
                    return Err(spec_err("/potential/params", Error::InvalidParams("params only apply to catalog potentials".into())));
                }
                custom.build().map_err(|e| spec_err("/potential/custom", e))
            }
            _ => Err(spec_err("/potential", Error::InvalidParams("give exactly one of `catalog` and `custom`".into()))),
        }
    }
}

fn default_band() -> i32 {
    DEFAULT_BAND
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub potential: PotentialRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_band")]
    pub band: i32,
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sym_variant: Option<SymVariant>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<OutputSpec>,
}

fn spec_error(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Spec { pointer: pointer.into(), message: message.into() }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        let part = match seg {
            Segment::Seq { index } => index.to_string(),
            Segment::Map { key } => key.replace('~', "~0").replace('/', "~1"),
            Segment::Enum { variant } => variant.clone(),
            Segment::Unknown => continue,
        };
        out.push('/');
        out.push_str(&part);
    }
    out
}

/// Parses and validates a run spec. Every failure is an [`Error::Spec`] whose
/// pointer names the offending JSON location.
pub fn parse_spec(document: &str) -> Result<RunSpec> {
    let mut de = serde_json::Deserializer::from_str(document);
    let spec: RunSpec = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| spec_error(json_pointer(e.path()), e.inner().to_string()))?;
    de.end().map_err(|e| spec_error("", e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

impl RunSpec {
    pub fn new(potential: PotentialRef, pipeline: Pipeline) -> Self {
        RunSpec { potential, grid: None, band: DEFAULT_BAND, pipeline, sym_variant: None, outputs: Vec::new() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run specs always serialize")
    }

    /// The coordinate mode the pipeline computes in.
    pub fn mode(&self) -> GridMode {
        match (self.pipeline, self.sym_variant) {
            (Pipeline::Morph, _) => GridMode::Morphed,
            (Pipeline::Surface, Some(v)) => v.mode(),
            _ => GridMode::Para,
        }
    }

    /// The explicit grid, or the default one sized for the potential.
    pub fn grid_for(&self, p: &PotentialPair) -> Result<GridSpec> {
        match &self.grid {
            Some(g) => Ok(g.clone()),
            None => GridSpec::square(self.mode(), p.n, DEFAULT_NODES, DEFAULT_HALF_WIDTH),
        }
    }

    /// Semantic checks that the schema cannot express. Builds the potential.
    pub fn validate(&self) -> Result<PotentialPair> {
        if !BAND_RANGE.contains(&self.band) {
            return Err(spec_error("/band", format!("band must lie in [{}, {}], got {}", BAND_RANGE.start(), BAND_RANGE.end(), self.band)));
        }
        let p = self.potential.build(self.band)?;
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| spec_error("/grid", e.to_string()))?;
            if g.n_coords() != p.n {
                return Err(spec_error("/grid/axes", format!("the potential has {} coordinates, so the grid needs {} axes", p.n, 2 * p.n)));
            }
            if self.pipeline != Pipeline::Verify && g.mode != self.mode() {
                return Err(spec_error("/grid/mode", format!("{:?} pipeline needs a {:?} grid", self.pipeline, self.mode())));
            }
        }
        match (self.pipeline, self.sym_variant) {
            (Pipeline::Surface, None) => return Err(spec_error("/sym_variant", "the SURFACE pipeline needs a sym_variant")),
            (_, Some(_)) if p.group().dim() != 2 => {
                return Err(spec_error("/sym_variant", "Sym formulas need a 2×2 potential"));
            }
            _ => {}
        }
        for (i, o) in self.outputs.iter().enumerate() {
            let ok = match o.format {
                OutputFormat::Obj | OutputFormat::Csv => self.pipeline == Pipeline::Surface,
                OutputFormat::Lpfg1 => self.pipeline != Pipeline::Verify,
                OutputFormat::Text => self.pipeline == Pipeline::Verify,
                OutputFormat::Json => true,
            };
            if !ok {
                return Err(spec_error(format!("/outputs/{i}/format"), format!("{:?} output does not apply to the {:?} pipeline", o.format, self.pipeline)));
            }
        }
        Ok(p)
    }

    /// `--grid NxM[@half-width]` override: the first n axes get N nodes, the
    /// last n get M, all on [−hw, hw] (default 1).
    pub fn set_grid_shorthand(&mut self, s: &str) -> Result<()> {
        let bad = || spec_error("/grid", format!("expected <nx>x<ny>[@<half-width>], got `{s}`"));
        let (dims, hw) = match s.split_once('@') {
            Some((d, h)) => (d, h.parse::<f64>().map_err(|_| bad())?),
            None => (s, DEFAULT_HALF_WIDTH),
        };
        let (nx, ny) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
        let nx: usize = nx.parse().map_err(|_| bad())?;
        let ny: usize = ny.parse().map_err(|_| bad())?;
        let p = self.potential.build(self.band)?;
        let mut axes = vec![Axis::symmetric(hw, nx); p.n];
        axes.extend(vec![Axis::symmetric(hw, ny); p.n]);
        let g = GridSpec::new(self.mode(), axes).map_err(|e| spec_error("/grid", e.to_string()))?;
        self.grid = Some(g);
        Ok(())
    }
}

/// What a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    pub frame: Option<ExtendedFrame>,
    pub surface: Option<SurfaceSample>,
    pub report: Option<VerificationReport>,
}

impl RunOutcome {
    /// One-paragraph human summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        if let Some(f) = &self.frame {
            let worst = f.conditions.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max);
            out.push_str(&format!(
                "frame {}: {} of {} nodes, band {}, worst condition {worst:.3e}\n",
                f.potential_id,
                f.valid_count(),
                f.grid.len(),
                f.band
            ));
            for nf in f.failures.iter().take(5) {
                out.push_str(&format!("  node {}: {}\n", nf.index, nf.reason));
            }
            if f.failures.len() > 5 {
                out.push_str(&format!("  ... {} more failed nodes\n", f.failures.len() - 5));
            }
        }
        if let Some(s) = &self.surface {
            out.push_str(&format!("surface {} ({}): {} points\n", s.potential_id, s.variant.as_str(), s.valid_count()));
        }
        if let Some(r) = &self.report {
            out.push_str(&r.to_text());
        }
        out
    }
}

/// Runs the spec's pipeline. VERIFY runs generic structural checks on the
/// spec's own potential and grid.
pub fn execute(spec: &RunSpec) -> Result<RunOutcome> {
    let p = spec.validate()?;
    let grid = spec.grid_for(&p)?;
    let mut out = RunOutcome { frame: None, surface: None, report: None };
    match spec.pipeline {
        Pipeline::Frame => out.frame = Some(build_frame_grid(&p, &grid, spec.band)?),
        Pipeline::Morph => out.frame = Some(morph_frame(&p, &grid, spec.band)?),
        Pipeline::Surface => {
            let variant = spec.sym_variant.expect("validated");
            let frame = match variant.mode() {
                GridMode::Para => build_frame_grid(&p, &grid, spec.band)?,
                GridMode::Morphed => {
                    let f = morph_frame(&p, &grid, spec.band)?;
                    // the Sym formula wants a unitary frame; dress if needed
                    if f.circle_reality_residual() < SYM_REALITY_TOL {
                        f
                    } else {
                        unitarize(&f, &p.space.nu1)?.0
                    }
                }
            };
            out.surface = Some(sym_formula(&frame, variant, C64::new(1.0, 0.0))?);
            out.frame = Some(frame);
        }
        Pipeline::Verify => out.report = Some(suite::structural_report(&p, &grid, spec.band)),
    }
    Ok(out)
}

/// Writes every requested output. Bytes depend only on the outcome.
pub fn write_outputs(outcome: &RunOutcome, outputs: &[OutputSpec]) -> Result<()> {
    for o in outputs {
        let bytes = render_output(outcome, o.format)?;
        std::fs::write(&o.path, bytes)?;
    }
    Ok(())
}

pub fn render_output(outcome: &RunOutcome, format: OutputFormat) -> Result<Vec<u8>> {
    let missing = |what: &str| Error::InvalidParams(format!("{format:?} output needs a {what}"));
    Ok(match format {
        OutputFormat::Obj => export_surface(outcome.surface.as_ref().ok_or_else(|| missing("surface"))?, ExportFormat::Obj)?,
        OutputFormat::Csv => export_surface(outcome.surface.as_ref().ok_or_else(|| missing("surface"))?, ExportFormat::Csv)?,
        OutputFormat::Lpfg1 => cache::write_frame_cache(outcome.frame.as_ref().ok_or_else(|| missing("frame"))?),
        OutputFormat::Text => outcome.summary().into_bytes(),
        OutputFormat::Json => {
            let v = if let Some(r) = &outcome.report {
                serde_json::to_value(r)
            } else if let Some(s) = &outcome.surface {
                serde_json::to_value(s)
            } else {
                let f = outcome.frame.as_ref().ok_or_else(|| missing("result"))?;
                serde_json::to_value(cache::FrameSummary::of(f))
            };
            let mut s = serde_json::to_string_pretty(&v.map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pointer_of(doc: &str) -> String {
        match parse_spec(doc) {
            Err(Error::Spec { pointer, .. }) => pointer,
            other => panic!("expected a spec error, got {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let s = parse_spec(r#"{"potential":{"catalog":"cylinder"}}"#).unwrap();
        assert_eq!(s.band, 32);
        assert_eq!(s.pipeline, Pipeline::Frame);
        let p = s.potential.build(s.band).unwrap();
        let g = s.grid_for(&p).unwrap();
        assert_eq!(g.shape(), vec![21, 21]);
        assert_eq!((g.axes[0].min, g.axes[0].max), (-1.0, 1.0));
    }

    #[test]
    fn error_pointers() {
        assert_eq!(pointer_of(r#"{"potential":{"catalog":"smyth","params":{"m":0}}}"#), "/potential/params/m");
        assert_eq!(pointer_of(r#"{"potential":{"catalog":"cylinder"},"band":4}"#), "/band");
        assert_eq!(pointer_of(r#"{"potential":{"catalog":"nope"}}"#), "/potential/catalog");
        assert_eq!(pointer_of(r#"{"potential":{"catalog":"cylinder"},"pipeline":"SURFACE"}"#), "/sym_variant");
        assert_eq!(pointer_of(r#"{"potential":{"catalog":"cylinder"},"colour":1}"#), "/colour");
        assert_eq!(pointer_of(r#"{"potential":{"catalog":"cylinder","extra":1}}"#), "/potential/extra");
        assert_eq!(
            pointer_of(r#"{"potential":{"catalog":"cylinder"},"outputs":[{"path":"a","format":"OBJ"}]}"#),
            "/outputs/0/format"
        );
    }

    #[test]
    fn grid_shorthand() {
        let mut s = RunSpec::new(PotentialRef::catalog(CatalogName::Grassmann4, CatalogParams::default()), Pipeline::Frame);
        s.set_grid_shorthand("3x5@0.4").unwrap();
        let g = s.grid.unwrap();
        assert_eq!(g.shape(), vec![3, 3, 5, 5]);
        assert_eq!(g.axes[3].max, 0.4);
    }
}
