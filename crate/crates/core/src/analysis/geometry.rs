//! Finite-difference fundamental forms and curvatures of sampled surfaces,
//! and residuals against affine quadrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fd;
use crate::error::{Error, Result};
use crate::frames::{GridSpec, FD_WIDTH};
use crate::sym::SurfaceSample;

type V3 = [f64; 3];

fn dot(g: &V3, a: &V3, b: &V3) -> f64 {
    g[0] * a[0] * b[0] + g[1] * a[1] * b[1] + g[2] * a[2] * b[2]
}

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// k-th derivative along `axis` of a vector field at `idx`, from the valid
/// nodes of that grid line.
pub fn line_derivative(grid: &GridSpec, field: &[Option<V3>], idx: usize, axis: usize, k: usize) -> Option<V3> {
    let multi = grid.multi_index(idx);
    let i = multi[axis];
    let stride = grid.stride(axis);
    let origin = idx - i * stride;
    let win = fd::window(i, grid.axes[axis].nodes, FD_WIDTH, 3 + k, |j| field[origin + j * stride].is_some())?;
    let w = fd::uniform_weights(i, &win, grid.axes[axis].step(), k);
    let mut out = [0.0; 3];
    for (&j, wj) in win.iter().zip(&w) {
        let p = field[origin + j * stride].as_ref()?;
        for c in 0..3 {
            out[c] += wj * p[c];
        }
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeForms {
    /// (E, F, G)
    pub first: [f64; 3],
    /// (L, M, N) against the unit normal
    pub second: [f64; 3],
    pub gauss: f64,
    pub mean: f64,
    /// ⟨n, n⟩ = ±1 in the ambient metric
    pub normal_sign: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FundamentalForms {
    pub grid: GridSpec,
    pub nodes: Vec<Option<NodeForms>>,
    /// nodes whose first fundamental form is numerically singular
    pub degenerate: Vec<usize>,
}

/// Relative size of det I below which a node counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// I, II, K and H at every node whose stencils are complete. Derivatives use the
/// same centred windows as the frame checks (order ≥ 4 in the interior).
pub fn fundamental_forms(surface: &SurfaceSample) -> Result<FundamentalForms> {
    let grid = &surface.grid;
    if grid.axes.len() != 2 || grid.axes.iter().any(|a| a.nodes < 5) {
        return Err(Error::RegionTooSmall("fundamental forms need a 2-axis grid of at least 5×5".into()));
    }
    let g = surface.variant.metric();
    let pts = &surface.points;
    let d1: Vec<Vec<Option<V3>>> =
        (0..2).map(|a| (0..grid.len()).into_par_iter().map(|i| line_derivative(grid, pts, i, a, 1)).collect()).collect();
    let per_node: Vec<std::result::Result<Option<NodeForms>, usize>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (Some(px), Some(py)) = (d1[0][idx], d1[1][idx]) else { return Ok(None) };
            let (Some(pxx), Some(pyy), Some(pxy)) = (
                line_derivative(grid, pts, idx, 0, 2),
                line_derivative(grid, pts, idx, 1, 2),
                line_derivative(grid, &d1[0], idx, 1, 1),
            ) else {
                return Ok(None);
            };
            let (e, f, gg) = (dot(&g, &px, &px), dot(&g, &px, &py), dot(&g, &py, &py));
            let det = e * gg - f * f;
            if det.abs() <= DEGENERACY_TOL * (e * e + gg * gg + f * f) {
                return Err(idx);
            }
            // normal: raise the index of the Euclidean cross product
            let c = cross(&px, &py);
            let mut n = [c[0] / g[0], c[1] / g[1], c[2] / g[2]];
            let nn = dot(&g, &n, &n);
            if nn.abs() < 1e-300 {
                return Err(idx);
            }
            let scale = nn.abs().sqrt();
            for v in n.iter_mut() {
                *v /= scale;
            }
            let eps = nn.signum();
            let (l, m, nz) = (dot(&g, &pxx, &n), dot(&g, &pxy, &n), dot(&g, &pyy, &n));
            Ok(Some(NodeForms {
                first: [e, f, gg],
                second: [l, m, nz],
                gauss: eps * (l * nz - m * m) / det,
                mean: eps * (e * nz - 2.0 * f * m + gg * l) / (2.0 * det),
                normal_sign: eps,
            }))
        })
        .collect();
    let mut out = FundamentalForms { grid: grid.clone(), nodes: Vec::with_capacity(per_node.len()), degenerate: Vec::new() };
    for r in per_node {
        match r {
            Ok(n) => out.nodes.push(n),
            Err(idx) => {
                out.nodes.push(None);
                out.degenerate.push(idx);
            }
        }
    }
    if out.nodes.iter().all(|n| n.is_none()) {
        return Err(Error::DegenerateMetric(out.degenerate.first().copied().unwrap_or(0)));
    }
    Ok(out)
}

/// Σ cᵢ(pᵢ − centerᵢ)², compared with a right-hand side that may depend on the node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadric {
    pub coeffs: [f64; 3],
    pub center: [f64; 3],
}

impl Quadric {
    pub fn value(&self, p: &V3) -> f64 {
        (0..3).map(|i| self.coeffs[i] * (p[i] - self.center[i]).powi(2)).sum()
    }
}

/// max over valid nodes of |Q(φ) − rhs(node coordinates)|.
pub fn quadric_residual<F: Fn(&[f64]) -> f64>(surface: &SurfaceSample, quadric: &Quadric, rhs: F) -> f64 {
    surface
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (quadric.value(&p) - rhs(&surface.grid.point(i))).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::GridMode;
    use crate::sym::{Signature, SymVariant};

    fn sample(f: impl Fn(f64, f64) -> V3) -> SurfaceSample {
        let grid = GridSpec::square(GridMode::Para, 1, 21, 0.5).unwrap();
        let points = (0..grid.len()).map(|i| { let p = grid.point(i); Some(f(p[0], p[1])) }).collect();
        SurfaceSample {
            grid,
            points,
            signature: Signature::Euclidean,
            variant: SymVariant::KSurface,
            eval_parameter: [1.0, 0.0],
            potential_id: "test".into(),
        }
    }

    #[test]
    fn sphere_of_radius_two() {
        let s = sample(|u, v| [2.0 * (u + 1.0).sin() * v.cos(), 2.0 * (u + 1.0).sin() * v.sin(), 2.0 * (u + 1.0).cos()]);
        let ff = fundamental_forms(&s).unwrap();
        for n in ff.nodes.iter().flatten() {
            assert!((n.gauss - 0.25).abs() < 1e-6, "{}", n.gauss);
            assert!((n.mean.abs() - 0.5).abs() < 1e-6);
        }
        let q = Quadric { coeffs: [1.0, 1.0, 1.0], center: [0.0; 3] };
        assert!(quadric_residual(&s, &q, |_| 4.0) < 1e-14);
    }

    #[test]
    fn plane_is_flat() {
        let s = sample(|u, v| [u + v, u - v, 0.3 * u]);
        let ff = fundamental_forms(&s).unwrap();
        assert!(ff.nodes.iter().flatten().all(|n| n.gauss.abs() < 1e-9 && n.mean.abs() < 1e-9));
    }
}
