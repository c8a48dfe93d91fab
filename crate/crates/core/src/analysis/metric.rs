//! Metric data (u, H, Q, R) read off the Maurer–Cartan form of an SL(2) frame
//! whose x-derivative lives in λ⁻¹, λ⁰ and y-derivative in λ⁰, λ¹, and the
//! Gauss and Painlevé III residuals built on it.
//!
//! Everything is expressed through gauge-invariant products of off-diagonal
//! entries, so the diagonal gauge left by the splitting never enters:
//! e^u = −4·U₁₂V₂₁/H², Q = −2·U₁₂U₂₁/H, R = −2·V₁₂V₂₁/H. Values are complex so
//! that frames with unimodular potentials (the Toda family) go through as well.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fd;
use crate::algebra::Mat;
use crate::error::{Error, Result};
use crate::frames::{mc_fourier, ExtendedFrame, GridMode, GridSpec, FD_WIDTH};
use crate::C64;

const SAMPLES: usize = 32;

/// Above this the Maurer–Cartan form is not of the expected shape at all.
pub const PATTERN_TOL: f64 = 1e-3;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricData {
    pub grid: GridSpec,
    /// normalized so that u = 0 at the base node
    pub h: C64,
    pub exp_u: Vec<Option<C64>>,
    pub u_x: Vec<Option<C64>>,
    pub u_y: Vec<Option<C64>>,
    pub q: Vec<Option<C64>>,
    pub r: Vec<Option<C64>>,
    /// worst of the shape and the four entry-pattern residuals
    pub consistency: f64,
    pub shape_residual: f64,
}

impl MetricData {
    /// principal logarithm of e^u
    pub fn u(&self, idx: usize) -> Option<C64> {
        self.exp_u[idx].map(|e| e.ln())
    }
}

fn rel(num: C64, terms: &[C64]) -> f64 {
    num.norm() / terms.iter().fold(1.0f64, |m, t| m.max(t.norm()))
}

/// First derivative along `axis` of a complex node field.
pub fn scalar_derivative(grid: &GridSpec, field: &[Option<C64>], idx: usize, axis: usize) -> Option<C64> {
    let i = grid.multi_index(idx)[axis];
    let stride = grid.stride(axis);
    let origin = idx - i * stride;
    let win = fd::window(i, grid.axes[axis].nodes, FD_WIDTH, 5, |j| field[origin + j * stride].is_some())?;
    let w = fd::uniform_weights(i, &win, grid.axes[axis].step(), 1);
    Some(win.iter().zip(&w).map(|(&j, wj)| field[origin + j * stride].unwrap() * wj).sum())
}

struct NodeMc {
    u_m1: Mat,
    u_0: Mat,
    v_0: Mat,
    v_1: Mat,
    shape: f64,
}

fn node_mc(frame: &ExtendedFrame, idx: usize) -> Option<NodeMc> {
    let cu = mc_fourier(frame, idx, 0, SAMPLES)?;
    let cv = mc_fourier(frame, idx, 1, SAMPLES)?;
    let pick = |c: &[(i32, Mat)], p: i32| c.iter().find(|(k, _)| *k == p).map(|(_, m)| *m).unwrap();
    let (u_m1, u_0, v_0, v_1) = (pick(&cu, -1), pick(&cu, 0), pick(&cv, 0), pick(&cv, 1));
    // mass off the pattern: other powers, and the wrong block in the allowed ones
    let (mut total, mut off) = (0.0, 0.0);
    for (c, off_power) in [(&cu, -1), (&cv, 1)] {
        for (k, m) in c.iter() {
            let n = m.norm_fro();
            total += n;
            off += if *k == off_power {
                m[(0, 0)].norm() + m[(1, 1)].norm()
            } else if *k == 0 {
                m[(0, 1)].norm() + m[(1, 0)].norm() + (m[(0, 0)] + m[(1, 1)]).norm()
            } else {
                n
            };
        }
    }
    Some(NodeMc { u_m1, u_0, v_0, v_1, shape: if total > 0.0 { off / total } else { 0.0 } })
}

/// Reads u, H, Q, R off the frame. Fails with `PatternMismatch` when the
/// Maurer–Cartan form is not of the expected shape.
pub fn extract_metric(frame: &ExtendedFrame) -> Result<MetricData> {
    let grid = &frame.grid;
    if frame.group().dim() != 2 || grid.mode != GridMode::Para || grid.axes.len() != 2 {
        return Err(Error::PatternMismatch("metric extraction needs a two-coordinate SL(2) para frame".into()));
    }
    if grid.axes.iter().any(|a| a.nodes < 5) {
        return Err(Error::RegionTooSmall("metric extraction needs at least 5 nodes per axis".into()));
    }
    let mc: Vec<Option<NodeMc>> = (0..grid.len()).into_par_iter().map(|i| node_mc(frame, i)).collect();
    let base = grid.base_index();
    let b = mc[base].as_ref().ok_or_else(|| Error::PatternMismatch("no Maurer–Cartan data at the base node".into()))?;
    let (p0, s0) = (b.u_m1[(0, 1)], b.v_1[(1, 0)]);
    if p0.norm() < 1e-12 || s0.norm() < 1e-12 {
        return Err(Error::PatternMismatch("off-diagonal entries vanish at the base node".into()));
    }
    // u(base) = 0; the sign of H makes the remaining diagonal gauge positive there
    let mut h = 2.0 * (-p0 * s0).sqrt();
    if (-2.0 * p0 / h).re < 0.0 {
        h = -h;
    }
    let n = grid.len();
    let (mut exp_u, mut q, mut r, mut p) = (vec![None; n], vec![None; n], vec![None; n], vec![None; n]);
    let mut shape_residual: f64 = 0.0;
    for (i, m) in mc.iter().enumerate() {
        let Some(m) = m else { continue };
        let (pu, qu) = (m.u_m1[(0, 1)], m.u_m1[(1, 0)]);
        let (rv, sv) = (m.v_1[(0, 1)], m.v_1[(1, 0)]);
        if pu.norm() < 1e-14 || sv.norm() < 1e-14 {
            return Err(Error::PatternMismatch(format!("degenerate off-diagonal entries at node {i}")));
        }
        exp_u[i] = Some(-4.0 * pu * sv / (h * h));
        q[i] = Some(-2.0 * pu * qu / h);
        r[i] = Some(-2.0 * rv * sv / h);
        p[i] = Some(pu);
        shape_residual = shape_residual.max(m.shape);
    }
    let dlog = |f: &[Option<C64>], i: usize, axis: usize| Some(scalar_derivative(grid, f, i, axis)? / f[i]?);
    let u_x: Vec<Option<C64>> = (0..n).map(|i| dlog(&exp_u, i, 0)).collect();
    let u_y: Vec<Option<C64>> = (0..n).map(|i| dlog(&exp_u, i, 1)).collect();
    let mut pattern: f64 = 0.0;
    for i in 0..n {
        let (Some(m), Some(qi), Some(ri)) = (mc[i].as_ref(), q[i], r[i]) else { continue };
        if let Some(d) = scalar_derivative(grid, &q, i, 1) {
            pattern = pattern.max(rel(d, &[qi]));
        }
        if let Some(d) = scalar_derivative(grid, &r, i, 0) {
            pattern = pattern.max(rel(d, &[ri]));
        }
        // diagonal entries against u_x/4 and −u_y/4 after removing the diagonal gauge
        if let (Some(ux), Some(lp)) = (u_x[i], dlog(&p, i, 0)) {
            let a = m.u_0[(0, 0)];
            pattern = pattern.max(rel(a + 0.5 * lp - 0.5 * ux, &[a, lp, ux]));
        }
        if let Some(lp) = dlog(&p, i, 1) {
            let a = m.v_0[(0, 0)];
            pattern = pattern.max(rel(a + 0.5 * lp, &[a, lp]));
        }
    }
    let consistency = pattern.max(shape_residual);
    if consistency > PATTERN_TOL {
        return Err(Error::PatternMismatch(format!("Maurer–Cartan form off the expected shape by {consistency:.2e}")));
    }
    Ok(MetricData { grid: grid.clone(), h, exp_u, u_x, u_y, q, r, consistency, shape_residual })
}

/// Least-squares c in f(s) ≈ c·s^m, with the fit error relative to max |f|.
pub fn fit_power(samples: &[(f64, C64)], m: u32) -> (C64, f64) {
    let den: f64 = samples.iter().map(|(s, _)| s.powi(2 * m as i32)).sum();
    let c: C64 = samples.iter().map(|(s, f)| f * s.powi(m as i32)).sum::<C64>() / den;
    let scale = samples.iter().fold(0.0f64, |a, (_, f)| a.max(f.norm()));
    let err = samples.iter().fold(0.0f64, |a, (s, f)| a.max((f - c * s.powi(m as i32)).norm()));
    (c, if scale > 0.0 { err / scale } else { err })
}

/// Q₀ and R₀ in Q = Q₀x^m, R = R₀y^m over all nodes, with the worse fit error.
pub fn fit_qr(md: &MetricData, m: u32) -> (C64, C64, f64) {
    let pts: Vec<(usize, Vec<f64>)> = (0..md.grid.len()).map(|i| (i, md.grid.point(i))).collect();
    let qs: Vec<(f64, C64)> = pts.iter().filter_map(|(i, p)| Some((p[0], md.q[*i]?))).collect();
    let rs: Vec<(f64, C64)> = pts.iter().filter_map(|(i, p)| Some((p[1], md.r[*i]?))).collect();
    let (q0, eq) = fit_power(&qs, m);
    let (r0, er) = fit_power(&rs, m);
    (q0, r0, eq.max(er))
}

/// max over nodes of the relative residual of u_xy − 2QRe^{−u} + ½H²e^u.
pub fn gauss_equation_residual(md: &MetricData) -> f64 {
    let grid = &md.grid;
    (0..grid.len())
        .into_par_iter()
        .filter_map(|i| {
            let uxy = scalar_derivative(grid, &md.u_x, i, 1)?;
            let e = md.exp_u[i]?;
            let a = 2.0 * md.q[i]? * md.r[i]? / e;
            let b = 0.5 * md.h * md.h * e;
            Some(rel(uxy - a + b, &[uxy, a, b]))
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PainleveReport {
    /// residual of the equation in (s, v)
    pub residual: f64,
    /// residual of the intermediate equation in (t, Ω)
    pub residual_t: f64,
    /// max |Ω| difference between the two anchor lines
    pub x_independence: f64,
    /// x-values of the grid lines along which Ω(t) = u(x, t/x) was read
    pub anchors: Vec<f64>,
    pub q0: C64,
    pub r0: C64,
    pub fit_error: f64,
}

const INTERP: usize = 8;

/// u on the x-line `ix` at height y, by Lagrange interpolation of ln e^u.
fn u_on_line(md: &MetricData, ix: usize, y: f64) -> Option<C64> {
    let ay = &md.grid.axes[1];
    let h = ay.step();
    let j0 = ((y - ay.value(0)) / h).floor() as isize - (INTERP as isize / 2 - 1);
    if j0 < 0 || j0 as usize + INTERP > ay.nodes {
        return None;
    }
    let js: Vec<usize> = (j0 as usize..j0 as usize + INTERP).collect();
    let xs: Vec<f64> = js.iter().map(|&j| ay.value(j)).collect();
    let w = fd::fornberg(y, &xs, 0).swap_remove(0);
    let mut s = C64::new(0.0, 0.0);
    for (&j, wj) in js.iter().zip(&w) {
        s += md.u(md.grid.flat_index(&[ix, j]))? * wj;
    }
    Some(s)
}

/// First and second derivatives of samples on a nonuniform grid, 7-point windows.
fn nonuniform_d12(xs: &[f64], fs: &[C64]) -> Vec<(C64, C64)> {
    (0..xs.len())
        .map(|i| {
            let win = fd::window(i, xs.len(), 7, 7, |_| true).unwrap();
            let sub: Vec<f64> = win.iter().map(|&j| xs[j]).collect();
            let w = fd::fornberg(xs[i], &sub, 2);
            let d = |k: usize| win.iter().zip(&w[k]).map(|(&j, wk)| fs[j] * wk).sum::<C64>();
            (d(1), d(2))
        })
        .collect()
}

/// Builds Ω(t) = u(x₀, t/x₀) along two interior grid lines x₀ > 0 and evaluates
/// the Painlevé III form of the Gauss equation for the exponent m.
pub fn painleve_iii_residual(md: &MetricData, m: u32, ts: &[f64]) -> Result<PainleveReport> {
    if ts.len() < 7 || ts.iter().any(|t| *t <= 0.0) {
        return Err(Error::InvalidParams("need at least 7 positive t samples".into()));
    }
    let ax = &md.grid.axes[0];
    let margin = FD_WIDTH / 2;
    let mut anchors: Vec<(usize, Vec<C64>)> = Vec::new();
    for ix in margin..ax.nodes.saturating_sub(margin) {
        let x0 = ax.value(ix);
        if x0 <= 0.0 {
            continue;
        }
        let omega: Option<Vec<C64>> = ts.iter().map(|t| u_on_line(md, ix, t / x0)).collect();
        if let Some(o) = omega {
            anchors.push((ix, o));
        }
    }
    if anchors.len() < 2 {
        return Err(Error::RegionTooSmall("the hyperbolas xy = t do not cross two interior grid lines".into()));
    }
    let (first, last) = (&anchors[0], &anchors[anchors.len() - 1]);
    let x_independence = first.1.iter().zip(&last.1).fold(0.0f64, |a, (p, q)| a.max((p - q).norm()));
    let omega = &first.1;
    let (q0, r0, fit_error) = fit_qr(md, m);
    let h2 = md.h * md.h;
    let mf = m as f64;

    let dt = nonuniform_d12(ts, omega);
    let residual_t = ts.iter().zip(omega).zip(&dt).fold(0.0f64, |acc, ((&t, &om), &(d1, d2))| {
        let a = t * d2;
        let b = -2.0 * q0 * r0 * t.powf(mf) * (-om).exp();
        let c = 0.5 * h2 * om.exp();
        acc.max(rel(a + d1 + b + c, &[a, d1, b, c]))
    });

    // v behaves like t^{−m/2}, which 12 samples cannot difference accurately near
    // the left end; its s-derivatives follow from those of the smooth Ω instead
    let residual = ts.iter().zip(omega).zip(&dt).fold(0.0f64, |acc, ((&t, &om), &(o1, o2))| {
        let s = 2.0 * t.powf((2.0 + mf) / 2.0) / (2.0 + mf);
        let v = om.exp() * t.powf(-mf / 2.0);
        let g = o1 - mf / (2.0 * t);
        let v_t = v * g;
        let v_tt = v * (g * g + o2 + mf / (2.0 * t * t));
        // ds/dt = t^{m/2}
        let d1 = v_t * t.powf(-mf / 2.0);
        let d2 = (v_tt - 0.5 * mf / t * v_t) * t.powf(-mf);
        let a = d1 * d1 / v;
        let b = -d1 / s;
        let c = (-h2 * v * v + 4.0 * r0 * q0) / ((2.0 + mf) * s);
        acc.max(rel(d2 - a - b - c, &[d2, a, b, c]))
    });

    Ok(PainleveReport {
        residual,
        residual_t,
        x_independence,
        anchors: vec![ax.value(first.0), ax.value(last.0)],
        q0,
        r0,
        fit_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::Axis;

    fn synthetic(f: impl Fn(f64, f64) -> (C64, C64, C64)) -> MetricData {
        let grid = GridSpec::square(GridMode::Para, 1, 11, 0.5).unwrap();
        let n = grid.len();
        let mut md = MetricData {
            grid: grid.clone(),
            h: C64::new(-2.0, 0.0),
            exp_u: vec![None; n],
            u_x: vec![None; n],
            u_y: vec![None; n],
            q: vec![None; n],
            r: vec![None; n],
            consistency: 0.0,
            shape_residual: 0.0,
        };
        for i in 0..n {
            let p = grid.point(i);
            let (e, q, r) = f(p[0], p[1]);
            md.exp_u[i] = Some(e);
            md.q[i] = Some(q);
            md.r[i] = Some(r);
        }
        md.u_x = (0..n).map(|i| Some(scalar_derivative(&grid, &md.exp_u, i, 0)? / md.exp_u[i]?)).collect();
        md
    }

    #[test]
    fn constant_balance_has_zero_residual() {
        // u = 0 and QR = H²/4
        let one = C64::new(1.0, 0.0);
        let md = synthetic(|_, _| (one, one, one));
        assert_eq!(gauss_equation_residual(&md), 0.0);
        let md = synthetic(|_, _| (one, one, 2.0 * one));
        assert!(gauss_equation_residual(&md) > 0.1);
    }

    #[test]
    fn power_fit() {
        let s: Vec<(f64, C64)> = (1..10).map(|k| (k as f64 * 0.1, C64::new(3.0 * (k as f64 * 0.1).powi(2), 0.0))).collect();
        let (c, e) = fit_power(&s, 2);
        assert!((c - C64::new(3.0, 0.0)).norm() < 1e-14 && e < 1e-14);
    }

    #[test]
    fn interpolation_on_a_line() {
        let grid = GridSpec::new(GridMode::Para, vec![Axis::symmetric(0.5, 11), Axis::symmetric(0.5, 11)]).unwrap();
        let mut md = synthetic(|x, y| (C64::new((x * y).exp(), 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        md.grid = grid;
        let u = u_on_line(&md, 8, 0.123).unwrap();
        assert!((u.re - 0.3 * 0.123).abs() < 1e-10, "{u}");
    }
}
