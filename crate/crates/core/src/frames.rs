//! Holomorphic frames from potentials, extended frames on grids, the morphing
//! substitution and the unitarizing gauge.
//!
//! Every coefficient of a potential depends on its own coordinate only, so the
//! holomorphic frame along the axis polyline 0 → x¹ → (x¹, x²) → … factors as
//! A = Φ₁(x¹)·Φ₂(x²)···. Grids cache each Φ per axis node; the per-node cost is
//! one product and one factorization.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{GroupSpec, Involution, Mat, SymmetricSpaceSpec};
use crate::analysis::fd;
use crate::error::{Error, Result};
use crate::factor::{pair_iwasawa_with_inverse, Iwasawa, IwasawaNormalization};
use crate::loops::TwistedLoop;
use crate::potentials::{check_morphing_default, CoefFn, PotentialPair, Side};

/// Local error target of the adaptive integrator, relative to ‖A‖₁.
pub const RK_TOL: f64 = 1e-13;
const MIN_STEP: f64 = 1e-10;
const TWIST_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GridMode {
    /// Real coordinates (x¹..xⁿ, y¹..yⁿ).
    Para,
    /// Complex coordinates z, stored as (Re z¹..Re zⁿ, Im z¹..Im zⁿ); z̄ is slaved.
    Morphed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn symmetric(half_width: f64, nodes: usize) -> Self {
        Axis { min: -half_width, max: half_width, nodes }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.nodes - 1) as f64
    }

    /// Index of the node at 0 (values are measured from it so that it is exact).
    pub fn zero_index(&self) -> Option<usize> {
        if self.nodes < 2 || !(self.min <= 0.0 && self.max >= 0.0) {
            return None;
        }
        let h = self.step();
        let k = (-self.min / h).round();
        if (self.min + k * h).abs() <= 1e-9 * h {
            Some(k as usize)
        } else {
            None
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        let z = self.zero_index().unwrap_or(0) as f64;
        let base = if self.zero_index().is_some() { 0.0 } else { self.min };
        base + (i as f64 - z) * self.step()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mode: GridMode,
    pub axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(mode: GridMode, axes: Vec<Axis>) -> Result<Self> {
        let g = GridSpec { mode, axes };
        g.validate()?;
        Ok(g)
    }

    /// Same axis on every one of the 2n directions.
    pub fn square(mode: GridMode, n: usize, nodes: usize, half_width: f64) -> Result<Self> {
        Self::new(mode, vec![Axis::symmetric(half_width, nodes); 2 * n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() % 2 != 0 {
            return Err(Error::InvalidParams(format!("a grid needs 2n axes, got {}", self.axes.len())));
        }
        for (k, a) in self.axes.iter().enumerate() {
            if a.nodes < 2 || !(a.min < a.max) || !a.min.is_finite() || !a.max.is_finite() {
                return Err(Error::InvalidParams(format!("axis {k} needs min < max and at least 2 nodes")));
            }
            if a.zero_index().is_none() {
                return Err(Error::InvalidParams(format!("axis {k}: the origin is not a grid node")));
            }
        }
        Ok(())
    }

    pub fn n_coords(&self) -> usize {
        self.axes.len() / 2
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.nodes).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major: the last axis varies fastest.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = idx % a.nodes;
            idx /= a.nodes;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.axes).fold(0, |acc, (&i, a)| acc * a.nodes + i)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.nodes).product()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).iter().zip(&self.axes).map(|(&i, a)| a.value(i)).collect()
    }

    pub fn base_index(&self) -> usize {
        let m: Vec<usize> = self.axes.iter().map(|a| a.zero_index().unwrap_or(0)).collect();
        self.flat_index(&m)
    }

    /// Coordinates fed to η and τ at a grid point.
    pub fn side_coords(&self, point: &[f64]) -> (Vec<C64>, Vec<C64>) {
        side_coords(self.mode, point)
    }
}

fn side_coords(mode: GridMode, point: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let n = point.len() / 2;
    match mode {
        GridMode::Para => (
            point[..n].iter().map(|&x| C64::new(x, 0.0)).collect(),
            point[n..].iter().map(|&y| C64::new(y, 0.0)).collect(),
        ),
        GridMode::Morphed => {
            let z: Vec<C64> = (0..n).map(|a| C64::new(point[a], point[n + a])).collect();
            let zb = z.iter().map(|w| w.conj()).collect();
            (z, zb)
        }
    }
}

// ---------------------------------------------------------------------------
// integration

/// Σ_a coef_a(w_a)·Δ_a as a loop, skipping coordinates with Δ_a = 0.
fn generator(p: &PotentialPair, side: Side, w: &[C64], delta: &[C64], band: i32) -> Result<TwistedLoop> {
    let g = p.group();
    let mut out = TwistedLoop::zero(g, band);
    for (a, f) in p.side(side).iter().enumerate() {
        if delta[a] == C64::new(0.0, 0.0) {
            continue;
        }
        if !p.in_domain(w[a]) {
            return Err(Error::DomainError(format!("{} outside the box of half-width {}", w[a], p.half_width)));
        }
        for (k, m) in f.terms(w[a])? {
            out = out.add(&TwistedLoop::monomial(g, band, k, m.scale(delta[a])));
        }
    }
    Ok(out)
}

fn lerp(from: &[C64], to: &[C64], t: f64) -> Vec<C64> {
    from.iter().zip(to).map(|(a, b)| a + (b - a) * t).collect()
}

fn rk4_step(
    p: &PotentialPair,
    side: Side,
    a: &TwistedLoop,
    from: &[C64],
    delta: &[C64],
    to: &[C64],
    t: f64,
    h: f64,
    band: i32,
) -> Result<TwistedLoop> {
    let g = |s: f64| generator(p, side, &lerp(from, to, s), delta, band);
    let g0 = g(t)?;
    let gm = g(t + 0.5 * h)?;
    let g1 = g(t + h)?;
    let hc = |x: f64| C64::new(x, 0.0);
    let k1 = a.mul(&g0);
    let k2 = a.add(&k1.scale(hc(0.5 * h))).mul(&gm);
    let k3 = a.add(&k2.scale(hc(0.5 * h))).mul(&gm);
    let k4 = a.add(&k3.scale(hc(h))).mul(&g1);
    let incr = k1.add(&k2.scale(hc(2.0))).add(&k3.scale(hc(2.0))).add(&k4);
    Ok(a.add(&incr.scale(hc(h / 6.0))))
}

/// Solves A⁻¹dA = (η or τ) along the straight segment from → to, starting from `a0`.
pub fn advance(
    p: &PotentialPair,
    side: Side,
    a0: &TwistedLoop,
    from: &[C64],
    to: &[C64],
    band: i32,
) -> Result<TwistedLoop> {
    let delta: Vec<C64> = from.iter().zip(to).map(|(a, b)| b - a).collect();
    if delta.iter().all(|d| d.norm() == 0.0) {
        return Ok(a0.clone());
    }
    let moving: Vec<usize> = (0..p.n).filter(|&k| delta[k].norm() > 0.0).collect();
    if moving.iter().all(|&k| p.side(side)[k].is_constant()) {
        // constant generator along the segment: one exact exponential
        let x = generator(p, side, from, &delta, band)?;
        for &k in &moving {
            if !p.in_domain(to[k]) {
                return Err(Error::DomainError(format!("{} outside the box of half-width {}", to[k], p.half_width)));
            }
        }
        return Ok(a0.mul(&TwistedLoop::exp(&x)));
    }
    let mut a = a0.clone();
    let mut t = 0.0;
    let mut h: f64 = 0.125;
    while t < 1.0 {
        let step = h.min(1.0 - t);
        let full = rk4_step(p, side, &a, from, &delta, to, t, step, band)?;
        let mid = rk4_step(p, side, &a, from, &delta, to, t, 0.5 * step, band)?;
        let half = rk4_step(p, side, &mid, from, &delta, to, t + 0.5 * step, 0.5 * step, band)?;
        let diff = half.sub(&full);
        let err = diff.norm_l1() / 15.0;
        let scale = half.norm_l1().max(1.0);
        if err <= RK_TOL * scale {
            a = half.add(&diff.scale(C64::new(1.0 / 15.0, 0.0)));
            t = if step == 1.0 - t { 1.0 } else { t + step };
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (RK_TOL * scale / err).powf(0.2)).clamp(0.2, 4.0) };
        h = step * factor;
        if h < MIN_STEP {
            return Err(Error::IntegrationFailure(format!("step size underflow at t = {t:.6}")));
        }
    }
    Ok(a)
}

/// Holomorphic frame along a piecewise-linear path starting at the origin.
/// Points have one entry per coordinate of the potential.
pub fn integrate_frame(p: &PotentialPair, side: Side, path: &[Vec<C64>], band: i32) -> Result<TwistedLoop> {
    let first = path.first().ok_or_else(|| Error::InvalidParams("empty path".into()))?;
    if path.iter().any(|q| q.len() != p.n) {
        return Err(Error::InvalidParams(format!("path points need {} coordinates", p.n)));
    }
    if first.iter().any(|w| w.norm() != 0.0) {
        return Err(Error::InvalidParams("path must start at the origin".into()));
    }
    let mut a = TwistedLoop::identity(p.group(), band);
    for seg in path.windows(2) {
        a = advance(p, side, &a, &seg[0], &seg[1], band)?;
    }
    Ok(a)
}

/// Axis polyline 0 → (w¹, 0, …) → (w¹, w², 0, …) → … → w.
pub fn axis_path(w: &[C64]) -> Vec<Vec<C64>> {
    let mut path = vec![vec![C64::new(0.0, 0.0); w.len()]];
    for k in 0..w.len() {
        let mut q = path.last().unwrap().clone();
        q[k] = w[k];
        path.push(q);
    }
    path
}

/// Holomorphic frames A, B at a single point and their pair-Iwasawa split.
pub fn frame_at(p: &PotentialPair, mode: GridMode, point: &[f64], band: i32) -> Result<Iwasawa> {
    if point.len() != 2 * p.n {
        return Err(Error::InvalidParams(format!("point needs {} coordinates", 2 * p.n)));
    }
    let (we, wt) = side_coords(mode, point);
    let a = integrate_frame(p, Side::Eta, &axis_path(&we), band)?;
    let b = integrate_frame(p, Side::Tau, &axis_path(&wt), band)?;
    let binv = b.inverse()?;
    pair_iwasawa_with_inverse(&a, &b, &binv, IwasawaNormalization::Balanced)
}

// ---------------------------------------------------------------------------
// per-coordinate tables

/// Φ(w_i) for w_i along a line through the origin (index `zero`), built outward.
fn line_table(
    p: &PotentialPair,
    side: Side,
    coord: usize,
    start: &TwistedLoop,
    start_w: C64,
    ws: &[C64],
    zero: usize,
    band: i32,
) -> Vec<Option<TwistedLoop>> {
    let n = p.n;
    let at = |w: C64| -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); n];
        v[coord] = w;
        v
    };
    let mut out: Vec<Option<TwistedLoop>> = vec![None; ws.len()];
    if let CoefFn::ConstLoop(_) = &p.side(side)[coord] {
        for (i, &w) in ws.iter().enumerate() {
            out[i] = advance(p, side, &TwistedLoop::identity(p.group(), band), &at(C64::new(0.0, 0.0)), &at(w), band).ok();
        }
        return out;
    }
    out[zero] = advance(p, side, start, &at(start_w), &at(ws[zero]), band).ok();
    for i in zero + 1..ws.len() {
        out[i] = match &out[i - 1] {
            Some(prev) => advance(p, side, prev, &at(ws[i - 1]), &at(ws[i]), band).ok(),
            None => None,
        };
    }
    for i in (0..zero).rev() {
        out[i] = match &out[i + 1] {
            Some(prev) => advance(p, side, prev, &at(ws[i + 1]), &at(ws[i]), band).ok(),
            None => None,
        };
    }
    out
}

/// Φ for one coordinate of one side over its own axes. PARA: one axis;
/// MORPHED: (Re, Im) axes, reached along 0 → Re w → w.
struct CoordTable {
    /// rows = Re nodes, cols = Im nodes (1 for PARA)
    cols: usize,
    phi: Vec<Option<TwistedLoop>>,
    inv: Vec<Option<TwistedLoop>>,
}

impl CoordTable {
    fn build(p: &PotentialPair, grid: &GridSpec, side: Side, coord: usize, band: i32) -> CoordTable {
        let n = p.n;
        let id = TwistedLoop::identity(p.group(), band);
        let zero = C64::new(0.0, 0.0);
        let phi = match grid.mode {
            GridMode::Para => {
                let ax = grid.axes[if side == Side::Eta { coord } else { n + coord }];
                let ws: Vec<C64> = (0..ax.nodes).map(|i| C64::new(ax.value(i), 0.0)).collect();
                line_table(p, side, coord, &id, zero, &ws, ax.zero_index().unwrap(), band)
            }
            GridMode::Morphed => {
                let (re, im) = (grid.axes[coord], grid.axes[n + coord]);
                let sign = if side == Side::Eta { 1.0 } else { -1.0 };
                let row: Vec<C64> = (0..re.nodes).map(|i| C64::new(re.value(i), 0.0)).collect();
                let base = line_table(p, side, coord, &id, zero, &row, re.zero_index().unwrap(), band);
                let rows: Vec<Vec<Option<TwistedLoop>>> = (0..re.nodes)
                    .into_par_iter()
                    .map(|i| {
                        let ws: Vec<C64> = (0..im.nodes).map(|j| C64::new(re.value(i), sign * im.value(j))).collect();
                        match &base[i] {
                            Some(b) => line_table(p, side, coord, b, row[i], &ws, im.zero_index().unwrap(), band),
                            None => vec![None; im.nodes],
                        }
                    })
                    .collect();
                rows.into_iter().flatten().collect()
            }
        };
        let cols = match grid.mode {
            GridMode::Para => 1,
            GridMode::Morphed => grid.axes[n + coord].nodes,
        };
        let inv = if side == Side::Tau {
            phi.par_iter().map(|l| l.as_ref().and_then(|l| l.inverse().ok())).collect()
        } else {
            Vec::new()
        };
        CoordTable { cols, phi, inv }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }
}

// ---------------------------------------------------------------------------
// extended frames

#[derive(Clone, Debug, PartialEq)]
pub struct NodeFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct ExtendedFrame {
    pub grid: GridSpec,
    pub space: SymmetricSpaceSpec,
    pub potential_id: String,
    pub band: i32,
    /// `None` where the node could not be computed (see `failures`)
    pub loops: Vec<Option<TwistedLoop>>,
    pub failures: Vec<NodeFailure>,
    /// condition number of each node's splitting system (NaN if failed)
    pub conditions: Vec<f64>,
    /// B⁺ at λ = 0 per node, the H-valued factor separating the balanced
    /// split from the one with B⁺(0) = id
    pub plus_constants: Vec<Option<Mat>>,
    pub gauge_applied: bool,
}

impl ExtendedFrame {
    pub fn group(&self) -> GroupSpec {
        self.space.group
    }

    pub fn valid_count(&self) -> usize {
        self.loops.iter().filter(|l| l.is_some()).count()
    }

    pub fn get(&self, idx: usize) -> Option<&TwistedLoop> {
        self.loops.get(idx).and_then(|l| l.as_ref())
    }

    /// C at every node, evaluated at μ.
    pub fn eval_all(&self, mu: C64) -> Vec<Option<Mat>> {
        self.loops.par_iter().map(|l| l.as_ref().and_then(|l| l.eval(mu).ok())).collect()
    }

    /// max over nodes and the given real θ of ‖ν₂(C_θ) − C_θ‖ / max(1, ‖C_θ‖).
    pub fn real_axis_residual(&self, thetas: &[f64]) -> f64 {
        let nu = &self.space.nu2;
        self.loops
            .par_iter()
            .flatten()
            .map(|l| {
                thetas.iter().fold(0.0f64, |w, &t| {
                    let c = match l.eval(C64::new(t, 0.0)) {
                        Ok(c) => c,
                        Err(_) => return f64::INFINITY,
                    };
                    let r = nu.apply(&c).map(|v| v.dist(&c) / c.norm_fro().max(1.0)).unwrap_or(f64::INFINITY);
                    w.max(r)
                })
            })
            .reduce(|| 0.0, f64::max)
    }

    /// max over nodes of the sampled residual of ν₁(C_{1/λ̄}) = C_λ.
    pub fn circle_reality_residual(&self) -> f64 {
        let kind = crate::loops::RealityKind::SecondKind(self.space.nu1.clone());
        self.loops
            .par_iter()
            .flatten()
            .map(|l| l.reality_residual(&kind).unwrap_or(f64::INFINITY))
            .reduce(|| 0.0, f64::max)
    }

    pub fn twist_residual(&self) -> f64 {
        self.loops
            .par_iter()
            .flatten()
            .map(|l| l.twist_residual(&self.space.sigma).unwrap_or(f64::INFINITY))
            .reduce(|| 0.0, f64::max)
    }
}

fn build(p: &PotentialPair, grid: &GridSpec, band: i32) -> Result<ExtendedFrame> {
    grid.validate()?;
    if grid.n_coords() != p.n {
        return Err(Error::InvalidParams(format!(
            "grid has {} coordinate pairs, potential has {}",
            grid.n_coords(),
            p.n
        )));
    }
    let n = p.n;
    let eta: Vec<CoordTable> = (0..n).map(|a| CoordTable::build(p, grid, Side::Eta, a, band)).collect();
    let tau: Vec<CoordTable> = (0..n).map(|a| CoordTable::build(p, grid, Side::Tau, a, band)).collect();
    let shape = grid.shape();

    // PARA: A depends on (x¹..xⁿ) only and B on (y¹..yⁿ) only, so cache the products
    let sub_len: usize = shape[..n].iter().product();
    let sub_len_y: usize = shape[n..].iter().product();
    let sub_multi = |mut k: usize, off: usize| -> Vec<usize> {
        let mut m = vec![0; n];
        for a in (0..n).rev() {
            m[a] = k % shape[off + a];
            k /= shape[off + a];
        }
        m
    };
    type Triple = (Option<TwistedLoop>, Option<TwistedLoop>, Option<TwistedLoop>);
    let side_loops = |multi: &[usize]| -> Triple {
        let mut a = Some(TwistedLoop::identity(p.group(), band));
        let mut b = a.clone();
        let mut binv = a.clone();
        for c in 0..n {
            let (ie, it) = match grid.mode {
                GridMode::Para => (eta[c].slot(multi[c], 0), tau[c].slot(multi[n + c], 0)),
                GridMode::Morphed => {
                    let s = eta[c].slot(multi[c], multi[n + c]);
                    (s, s)
                }
            };
            a = a.zip(eta[c].phi[ie].as_ref()).map(|(x, y)| x.mul(y));
            b = b.zip(tau[c].phi[it].as_ref()).map(|(x, y)| x.mul(y));
            binv = binv.zip(tau[c].inv[it].as_ref()).map(|(x, y)| y.mul(&x));
        }
        (a, b, binv)
    };
    let (a_cache, b_cache): (Vec<Triple>, Vec<Triple>) = if grid.mode == GridMode::Para {
        let ac = (0..sub_len)
            .into_par_iter()
            .map(|k| {
                let mut m = sub_multi(k, 0);
                m.extend(vec![grid.axes[n].zero_index().unwrap(); n]);
                let (a, _, _) = side_loops(&m);
                (a, None, None)
            })
            .collect();
        let bc = (0..sub_len_y)
            .into_par_iter()
            .map(|k| {
                let mut m: Vec<usize> = (0..n).map(|a| grid.axes[a].zero_index().unwrap()).collect();
                m.extend(sub_multi(k, n));
                let (_, b, bi) = side_loops(&m);
                (None, b, bi)
            })
            .collect();
        (ac, bc)
    } else {
        (Vec::new(), Vec::new())
    };

    let results: Vec<std::result::Result<(TwistedLoop, Mat, f64), String>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let multi = grid.multi_index(idx);
            let (a, b, binv) = if grid.mode == GridMode::Para {
                let ka = multi[..n].iter().zip(&shape[..n]).fold(0, |acc, (&i, &s)| acc * s + i);
                let kb = multi[n..].iter().zip(&shape[n..]).fold(0, |acc, (&i, &s)| acc * s + i);
                (a_cache[ka].0.clone(), b_cache[kb].1.clone(), b_cache[kb].2.clone())
            } else {
                side_loops(&multi)
            };
            let (a, b, binv) = match (a, b, binv) {
                (Some(a), Some(b), Some(bi)) => (a, b, bi),
                _ => return Err("holomorphic frame unavailable (coefficient domain or integration)".to_string()),
            };
            let iw = pair_iwasawa_with_inverse(&a, &b, &binv, IwasawaNormalization::Balanced).map_err(|e| e.to_string())?;
            let tw = iw.c.twist_residual(&p.space.sigma).map_err(|e| e.to_string())?;
            if !(tw < TWIST_TOL) {
                return Err(format!("twist residual {tw:.2e}"));
            }
            Ok((iw.c, iw.bplus.coeff(0), iw.report.condition))
        })
        .collect();

    let base = grid.base_index();
    if results[base].is_err() {
        return Err(Error::FatalOffBigCell);
    }
    let mut loops = Vec::with_capacity(results.len());
    let mut conditions = Vec::with_capacity(results.len());
    let mut plus_constants = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok((c, h, cond)) => {
                loops.push(Some(c));
                plus_constants.push(Some(h));
                conditions.push(cond);
            }
            Err(reason) => {
                loops.push(None);
                plus_constants.push(None);
                conditions.push(f64::NAN);
                failures.push(NodeFailure { index, reason });
            }
        }
    }
    Ok(ExtendedFrame {
        grid: grid.clone(),
        space: p.space.clone(),
        potential_id: p.id.clone(),
        band,
        loops,
        failures,
        conditions,
        plus_constants,
        gauge_applied: false,
    })
}

/// Extended frame C on a real (x, y) grid.
pub fn build_frame_grid(p: &PotentialPair, grid: &GridSpec, band: i32) -> Result<ExtendedFrame> {
    if grid.mode != GridMode::Para {
        return Err(Error::InvalidParams("build_frame_grid needs a PARA grid".into()));
    }
    build(p, grid, band)
}

/// Morphing residuals below this admit a potential to `morph_frame`.
pub const MORPHING_TOL: f64 = 1e-8;

/// Extended frame on a complex grid: η is integrated to z and τ to z̄.
pub fn morph_frame(p: &PotentialPair, grid: &GridSpec, band: i32) -> Result<ExtendedFrame> {
    if grid.mode != GridMode::Morphed {
        return Err(Error::InvalidParams("morph_frame needs a MORPHED grid".into()));
    }
    let r = check_morphing_default(p)?;
    if !(r < MORPHING_TOL) {
        return Err(Error::MorphingViolated(r));
    }
    build(p, grid, band)
}

// ---------------------------------------------------------------------------
// unitarization

#[derive(Clone, Debug)]
pub struct GaugeField {
    /// h = exp(X/2) per node
    pub h: Vec<Option<Mat>>,
    pub x: Vec<Option<Mat>>,
}

impl GaugeField {
    /// max ‖σ(h) − h‖
    pub fn sigma_residual(&self, sigma: &Involution) -> f64 {
        self.h
            .iter()
            .flatten()
            .map(|h| sigma.apply(h).map(|s| s.dist(h)).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    /// max ‖dν(X) + X‖
    pub fn nu_residual(&self, nu: &Involution) -> f64 {
        self.x.iter().flatten().map(|x| (nu.apply_diff(x) + *x).norm_fro()).fold(0.0, f64::max)
    }
}

/// Spectral samples on S¹ (besides λ = 1) at which X is re-extracted.
fn gauge_check_samples() -> Vec<C64> {
    (1..=8).map(|j| C64::from_polar(1.0, 2.0 * PI * (j as f64 - 0.31) / 9.0)).collect()
}

/// Tolerance on the spread of X across spectral samples.
pub const GAUGE_CONSISTENCY_TOL: f64 = 1e-6;

/// C′ = C·exp(X/2) with exp X = C⁻¹·ν(C), making C′ fixed by the second-kind reality.
pub fn unitarize(frame: &ExtendedFrame, nu: &Involution) -> Result<(ExtendedFrame, GaugeField)> {
    let samples = gauge_check_samples();
    let one = C64::new(1.0, 0.0);
    let per_node: Vec<std::result::Result<(TwistedLoop, Mat, Mat), String>> = frame
        .loops
        .par_iter()
        .map(|l| {
            let l = l.as_ref().ok_or_else(|| "no frame".to_string())?;
            let extract = |mu: C64| -> Result<Mat> {
                let c = l.eval(mu)?;
                (c.inverse()? * nu.apply(&c)?).log()
            };
            let x = extract(one).map_err(|e| e.to_string())?;
            let mut spread: f64 = 0.0;
            for &mu in &samples {
                let xm = extract(mu).map_err(|e| e.to_string())?;
                spread = spread.max(xm.dist(&x));
            }
            if !(spread <= GAUGE_CONSISTENCY_TOL) {
                return Err(Error::GaugeInconsistent(spread).to_string());
            }
            let h = x.scale_re(0.5).exp();
            Ok((l.right_mul(&h), h, x))
        })
        .collect();
    if per_node[frame.grid.base_index()].is_err() {
        return Err(Error::FatalOffBigCell);
    }
    let mut out = frame.clone();
    out.gauge_applied = true;
    let mut gauge = GaugeField { h: Vec::with_capacity(per_node.len()), x: Vec::with_capacity(per_node.len()) };
    for (i, r) in per_node.into_iter().enumerate() {
        match r {
            Ok((c, h, x)) => {
                out.loops[i] = Some(c);
                gauge.h.push(Some(h));
                gauge.x.push(Some(x));
            }
            Err(reason) => {
                if out.loops[i].is_some() {
                    out.loops[i] = None;
                    out.plus_constants[i] = None;
                    out.failures.push(NodeFailure { index: i, reason });
                }
                gauge.h.push(None);
                gauge.x.push(None);
            }
        }
    }
    Ok((out, gauge))
}

// ---------------------------------------------------------------------------
// translation gauge of angle-function potentials

/// Right H-gauge of a real Toda frame after which C⁻¹dC depends on ω and its
/// derivatives only, so C(x + t, y + t) = C(t, t)·C(x, y).
///
/// The λ⁻¹ part of C⁻¹∂ₓC has upper entry (i/2)·e^{iφ}, φ = ω(x, 0) − ω(0, 0) + 2·arg a
/// in the balanced split (a = B⁺(0)₁₁). Conjugating by diag(e^{iκ/2}, e^{−iκ/2}) with
/// κ = φ − (ω(x, y) − ω(0, 0))/2 turns the phase into (ω − ω(0, 0))/2. The Sym surface
/// is unchanged since the gauge does not depend on λ.
pub fn toda_gauge(p: &PotentialPair, frame: &ExtendedFrame) -> Result<ExtendedFrame> {
    let angle = p
        .angle_function()
        .ok_or_else(|| Error::InvalidParams(format!("{} has no angle function", p.id)))?;
    if frame.grid.mode != GridMode::Para || frame.gauge_applied {
        return Err(Error::InvalidParams("the translation gauge needs an ungauged PARA frame".into()));
    }
    let w0 = angle.eval(0.0, 0.0)?.0;
    let mut out = frame.clone();
    for idx in 0..frame.grid.len() {
        let (Some(c), Some(h)) = (&frame.loops[idx], &frame.plus_constants[idx]) else { continue };
        let pt = frame.grid.point(idx);
        let phi = angle.eval(pt[0], 0.0)?.0 - w0 + 2.0 * h[(0, 0)].arg();
        let kappa = phi - 0.5 * (angle.eval(pt[0], pt[1])?.0 - w0);
        let k = Mat::diag(&[C64::from_polar(1.0, 0.5 * kappa), C64::from_polar(1.0, -0.5 * kappa)]);
        out.loops[idx] = Some(c.right_mul(&k));
    }
    out.gauge_applied = true;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Maurer-Cartan checks

/// Stencil width for derivatives along grid lines.
pub const FD_WIDTH: usize = 11;
const FD_MIN_WIDTH: usize = 5;

/// Derivative along `axis` of a node field at `idx`, using the valid nodes of that grid line.
fn axis_derivative<T, F>(grid: &GridSpec, field: &[Option<T>], idx: usize, axis: usize, combine: F) -> Option<T>
where
    F: Fn(&[(&T, f64)]) -> T,
{
    let multi = grid.multi_index(idx);
    let i = multi[axis];
    let stride = grid.stride(axis);
    let origin = idx - i * stride;
    let len = grid.axes[axis].nodes;
    let win = fd::window(i, len, FD_WIDTH, FD_MIN_WIDTH, |j| field[origin + j * stride].is_some())?;
    let w = fd::uniform_weights(i, &win, grid.axes[axis].step(), 1);
    let terms: Vec<(&T, f64)> = win.iter().zip(&w).map(|(&j, &wj)| (field[origin + j * stride].as_ref().unwrap(), wj)).collect();
    Some(combine(&terms))
}

fn mat_combine(terms: &[(&Mat, f64)]) -> Mat {
    let mut s = Mat::zeros(terms[0].0.dim());
    for (m, w) in terms {
        s += m.scale_re(*w);
    }
    s
}

/// U_a = C⁻¹∂_aC at every node, for each of the 2n axes, at spectral value μ.
pub fn maurer_cartan_fields(frame: &ExtendedFrame, mu: C64) -> Vec<Vec<Option<Mat>>> {
    let grid = &frame.grid;
    let cs = frame.eval_all(mu);
    (0..grid.axes.len())
        .map(|axis| {
            (0..grid.len())
                .into_par_iter()
                .map(|idx| {
                    let c = cs[idx].as_ref()?;
                    let d = axis_derivative(grid, &cs, idx, axis, mat_combine)?;
                    Some(c.inverse().ok()? * d)
                })
                .collect()
        })
        .collect()
}

/// Spectral values at which flatness is checked.
pub fn flatness_samples() -> [C64; 3] {
    [C64::from_polar(1.0, PI / 4.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]
}

/// max over faces, nodes and μ of ‖∂_aU_b − ∂_bU_a + [U_a, U_b]‖ relative to
/// 1 + ‖∂_aU_b‖ + ‖∂_bU_a‖ + ‖[U_a, U_b]‖, times the face area h_a·h_b.
pub fn check_flatness(frame: &ExtendedFrame) -> f64 {
    let grid = &frame.grid;
    let mut worst: f64 = 0.0;
    for mu in flatness_samples() {
        let u = maurer_cartan_fields(frame, mu);
        for a in 0..u.len() {
            for b in a + 1..u.len() {
                let area = grid.axes[a].step() * grid.axes[b].step();
                let r = (0..grid.len())
                    .into_par_iter()
                    .filter_map(|idx| {
                        let ua = u[a][idx].as_ref()?;
                        let ub = u[b][idx].as_ref()?;
                        let da_ub = axis_derivative(grid, &u[b], idx, a, mat_combine)?;
                        let db_ua = axis_derivative(grid, &u[a], idx, b, mat_combine)?;
                        let br = ua.commutator(ub);
                        let f = da_ub - db_ua + br;
                        Some(f.norm_fro() / (1.0 + da_ub.norm_fro() + db_ua.norm_fro() + br.norm_fro()))
                    })
                    .reduce(|| 0.0, f64::max);
                worst = worst.max(r * area);
            }
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BandShape {
    /// mass at |k| ≥ 2 relative to the total
    pub outside_band: f64,
    /// 𝔪-part at k = 0 and 𝔥-part at k = ±1, relative to the total
    pub wrong_component: f64,
    pub nodes_checked: usize,
}

impl BandShape {
    pub fn worst(&self) -> f64 {
        self.outside_band.max(self.wrong_component)
    }
}

const BAND_SAMPLES: usize = 64;

/// Laurent coefficients of C⁻¹∂_aC at one node, from `m` samples on S¹, as
/// (power, coefficient) with powers in [−m/2, m/2).
pub fn mc_fourier(frame: &ExtendedFrame, idx: usize, axis: usize, m: usize) -> Option<Vec<(i32, Mat)>> {
    let grid = &frame.grid;
    let c = frame.loops[idx].as_ref()?;
    let d = axis_derivative(grid, &frame.loops, idx, axis, |terms| {
        terms.iter().fold(TwistedLoop::zero(frame.group(), frame.band), |acc, (l, w)| acc.add(&l.scale(C64::new(*w, 0.0))))
    })?;
    let mut coeffs = vec![Mat::zeros(frame.group().dim()); m];
    for j in 0..m {
        let mu = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        let beta = c.eval(mu).and_then(|c| c.inverse()).ok()? * d.eval(mu).ok()?;
        for (k, ck) in coeffs.iter_mut().enumerate() {
            *ck += beta.scale(mu.powi(-(k as i32)) / m as f64);
        }
    }
    Some(
        coeffs
            .into_iter()
            .enumerate()
            .map(|(k, ck)| (if k < m / 2 { k as i32 } else { k as i32 - m as i32 }, ck))
            .collect(),
    )
}

/// Fourier coefficients of C⁻¹∂_aC over S¹ at every `stride`-th valid node.
pub fn mc_band_shape(frame: &ExtendedFrame, stride: usize) -> BandShape {
    let grid = &frame.grid;
    let sigma = &frame.space.sigma;
    let nodes: Vec<usize> = (0..grid.len()).filter(|i| frame.loops[*i].is_some()).step_by(stride.max(1)).collect();
    let per_node: Vec<(f64, f64, usize)> = nodes
        .par_iter()
        .map(|&idx| {
            // masses are pooled over the axes: a coordinate the frame does not
            // depend on has a pure-noise derivative and must not dominate
            let (mut total, mut out, mut wr) = (0.0, 0.0, 0.0);
            let mut count = 0;
            for axis in 0..grid.axes.len() {
                let Some(coeffs) = mc_fourier(frame, idx, axis, BAND_SAMPLES) else { continue };
                for (power, ck) in &coeffs {
                    let nrm = ck.norm_fro();
                    total += nrm;
                    if power.abs() >= 2 {
                        out += nrm;
                    } else {
                        let s = sigma.apply_diff(ck);
                        let part = if *power == 0 { (*ck - s).scale_re(0.5) } else { (*ck + s).scale_re(0.5) };
                        wr += part.norm_fro();
                    }
                }
                count += 1;
            }
            if total > 0.0 {
                (out / total, wr / total, count)
            } else {
                (0.0, 0.0, count)
            }
        })
        .collect();
    let mut shape = BandShape::default();
    for (o, w, c) in per_node {
        shape.outside_band = shape.outside_band.max(o);
        shape.wrong_component = shape.wrong_component.max(w);
        shape.nodes_checked += usize::from(c > 0);
    }
    shape
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{catalog_potential, CatalogName, CatalogParams};

    #[test]
    fn grid_indexing_round_trips() {
        let g = GridSpec::new(GridMode::Para, vec![Axis::symmetric(1.0, 5), Axis { min: -0.5, max: 1.0, nodes: 4 }]).unwrap();
        assert_eq!(g.len(), 20);
        for idx in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(idx)), idx);
        }
        assert_eq!(g.point(g.base_index()), vec![0.0, 0.0]);
        assert!(GridSpec::new(GridMode::Para, vec![Axis { min: 0.1, max: 1.0, nodes: 4 }; 2]).is_err());
    }

    #[test]
    fn zero_length_path_is_identity() {
        let p = catalog_potential(CatalogName::Smyth, CatalogParams { m: Some(1), b: None }, 16).unwrap();
        let a = integrate_frame(&p, Side::Eta, &[vec![C64::new(0.0, 0.0)], vec![C64::new(0.0, 0.0)]], 16).unwrap();
        assert!(a.eval(C64::new(0.3, 0.4)).unwrap().dist(&Mat::identity(2)) < 1e-15);
    }
}
