//! Residual of the sine-Gordon equation ∂x∂yω = sin ω on a grid.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::GridSpec;

/// Eighth-order central weights for f′ on the stencil −4..=4. Fourth order
/// leaves about 1e-4 of truncation error at h ≈ 0.08.
const D1: [f64; 9] = [1.0 / 280.0, -4.0 / 105.0, 1.0 / 5.0, -4.0 / 5.0, 0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const HALF: usize = 4;

/// max over interior nodes of |ω_xy − sin ω| / max(1, |ω_xy|, |sin ω|), with ω_xy
/// from the tensor product of central differences.
pub fn sine_gordon_residual<F>(omega: F, grid: &GridSpec) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    if grid.axes.len() != 2 {
        return Err(Error::InvalidParams("sine-Gordon residual needs a two-axis grid".into()));
    }
    let (ax, ay) = (&grid.axes[0], &grid.axes[1]);
    if ax.nodes <= 2 * HALF || ay.nodes <= 2 * HALF {
        return Err(Error::RegionTooSmall(format!("need more than {} nodes per axis", 2 * HALF)));
    }
    let (hx, hy) = (ax.step(), ay.step());
    let rows: Vec<Result<f64>> = (HALF..ax.nodes - HALF)
        .into_par_iter()
        .map(|i| {
            let mut worst: f64 = 0.0;
            for j in HALF..ay.nodes - HALF {
                let (x, y) = (ax.value(i), ay.value(j));
                let mut wxy = 0.0;
                for (p, wp) in D1.iter().enumerate() {
                    for (q, wq) in D1.iter().enumerate() {
                        if *wp != 0.0 && *wq != 0.0 {
                            let xs = x + (p as f64 - HALF as f64) * hx;
                            let ys = y + (q as f64 - HALF as f64) * hy;
                            wxy += wp * wq * omega(xs, ys)?;
                        }
                    }
                }
                wxy /= hx * hy;
                let s = omega(x, y)?.sin();
                worst = worst.max((wxy - s).abs() / wxy.abs().max(s.abs()).max(1.0));
            }
            Ok(worst)
        })
        .collect();
    rows.into_iter().try_fold(0.0f64, |w, r| Ok(w.max(r?)))
}

/// ω′(x, y) = ω(x, −y) + π, again a sine-Gordon solution.
pub fn dual_solution<F>(omega: F) -> impl Fn(f64, f64) -> Result<f64> + Sync
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    move |x, y| Ok(omega(x, -y)? + std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::GridMode;

    #[test]
    fn non_solution_is_detected() {
        let g = GridSpec::square(GridMode::Para, 1, 11, 0.5).unwrap();
        let r = sine_gordon_residual(|x, y| Ok(x * y), &g).unwrap();
        assert!(r > 1e-3);
        assert!(sine_gordon_residual(|_, _| Ok(0.0), &g).unwrap() == 0.0);
    }
}
