//! The orthonormal frame of a Finsler surface with `e₂ = ℓ`.

use nalgebra::DMatrix;

use crate::error::{GbcError, Result};
use crate::metric::finsler::FinslerMetric;
use crate::metric::norm::OrthonormalFrame;

/// Rows of `B` for a 2×2 fundamental tensor `g` at `y`:
/// `e₂ = y/F` and `e₁ = R g y /(F √det g)` with `R = [[0,1],[−1,0]]`.
///
/// `e₁` is g-orthogonal to `y`, has unit length because `Rᵀ g R = det g · g⁻¹`,
/// and `det B = 1/√det g > 0`, so the frame is smooth along every fiber.
pub fn frame_rows(g: &[[f64; 2]; 2], y: [f64; 2], f: f64) -> Result<[[f64; 2]; 2]> {
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    if !(det > 0.0) {
        return Err(GbcError::InvalidMetric(format!("det g = {det} is not positive")));
    }
    let s = det.sqrt() * f;
    let w = [g[0][0] * y[0] + g[0][1] * y[1], g[1][0] * y[0] + g[1][1] * y[1]];
    Ok([[w[1] / s, -w[0] / s], [y[0] / f, y[1] / f]])
}

pub fn orthonormal_frame(metric: &FinslerMetric, chart: usize, x: [f64; 2], y: [f64; 2]) -> Result<OrthonormalFrame> {
    let ft = metric.fundamental_tensor(chart, x, y)?;
    let g = [[ft.g[(0, 0)], ft.g[(0, 1)]], [ft.g[(1, 0)], ft.g[(1, 1)]]];
    let rows = frame_rows(&g, y, metric.eval(chart, x, y))?;
    let mut b = DMatrix::from_fn(2, 2, |i, k| rows[i][k]);
    if metric.orientation() < 0.0 {
        b.row_mut(0).neg_mut();
    }
    Ok(OrthonormalFrame { b })
}
