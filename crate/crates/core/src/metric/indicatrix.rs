//! The indicatrix `{F(x,·) = 1}` of a Finsler surface and its volume.

use crate::ad::hessian;
use crate::error::{GbcError, Result};
use crate::metric::finsler::{FinslerMetric, MetricJet};
use crate::quadrature::{circle_rule, pairwise_sum, FdConfig};

/// Parameterisation `θ ↦ r(θ)(cos θ, sin θ)` of one indicatrix.
#[derive(Clone, Copy, Debug)]
pub struct Indicatrix<'a> {
    metric: &'a FinslerMetric,
    chart: usize,
    x: [f64; 2],
}

pub fn indicatrix_param(metric: &FinslerMetric, chart: usize, x: [f64; 2]) -> Indicatrix<'_> {
    Indicatrix { metric, chart, x }
}

impl Indicatrix<'_> {
    /// `r(θ) = 1/F(x, (cos θ, sin θ))`, exact by positive homogeneity.
    pub fn radius(&self, theta: f64) -> Result<f64> {
        let f = self.metric.eval(self.chart, self.x, [theta.cos(), theta.sin()]);
        if !(f.is_finite() && f > 0.0) {
            return Err(GbcError::InvalidMetric(format!(
                "F(x,u) = {f} at x = {:?}, θ = {theta}",
                self.x
            )));
        }
        Ok(1.0 / f)
    }

    pub fn point(&self, theta: f64) -> Result<[f64; 2]> {
        let r = self.radius(theta)?;
        Ok([r * theta.cos(), r * theta.sin()])
    }
}

/// The representative `y(x,θ)` with `F = 1`, its chart derivatives and the
/// metric jet there.
#[derive(Clone, Copy, Debug)]
pub struct IndicatrixPoint {
    pub theta: f64,
    pub r: f64,
    pub y: [f64; 2],
    /// `∂y/∂x¹`, `∂y/∂x²`, `∂y/∂θ`.
    pub dy: [[f64; 2]; 3],
    pub jet: MetricJet,
}

pub fn indicatrix_point(metric: &FinslerMetric, chart: usize, x: [f64; 2], theta: f64) -> Result<IndicatrixPoint> {
    let r = indicatrix_param(metric, chart, x).radius(theta)?;
    let u = [theta.cos(), theta.sin()];
    let du = [-u[1], u[0]];
    let y = [r * u[0], r * u[1]];
    let jet = metric.jet(chart, x, y)?;
    let f = jet.f;
    // F_x and F_y from ∂(F²) = 2F ∂F
    let fx = [jet.x[0] / (2.0 * f), jet.x[1] / (2.0 * f)];
    let fy = [jet.y[0] / (2.0 * f), jet.y[1] / (2.0 * f)];
    let mut dy = [[0.0; 2]; 3];
    for a in 0..2 {
        let dr = -r * fx[a] / f;
        dy[a] = [dr * u[0], dr * u[1]];
    }
    let dr = -r * r * (fy[0] * du[0] + fy[1] * du[1]) / f;
    dy[2] = [dr * u[0] + r * du[0], dr * u[1] + r * du[1]];
    Ok(IndicatrixPoint { theta, r, y, dy, jet })
}

/// Density `ρ(θ)` with `dν_x = ρ dθ`, from
/// `dν_x = √det g · Σ (−1)^{i−1} (yⁱ/F) d(y¹/F) ∧ … ` on the indicatrix.
pub fn fiber_volume_form(metric: &FinslerMetric, chart: usize, x: [f64; 2], theta: f64) -> Result<f64> {
    let r = indicatrix_param(metric, chart, x).radius(theta)?;
    let u = [theta.cos(), theta.sin()];
    let y = [r * u[0], r * u[1]];
    let (f2, grad, h) = hessian(&y, |v| metric.f_sq(chart, [crate::ad::Real::cst(x[0]), crate::ad::Real::cst(x[1])], [v[0], v[1]]));
    let f = f2.sqrt();
    let det = 0.25 * (h[0][0] * h[1][1] - h[0][1] * h[1][0]);
    if !(det > 0.0) {
        return Err(GbcError::InvalidMetric(format!("det g = {det} at x = {x:?}, θ = {theta}")));
    }
    let fy = [grad[0] / (2.0 * f), grad[1] / (2.0 * f)];
    let du = [-u[1], u[0]];
    let dr = -r * r * (fy[0] * du[0] + fy[1] * du[1]) / f;
    let dy = [dr * u[0] + r * du[0], dr * u[1] + r * du[1]];
    Ok(det.sqrt() * (y[0] * dy[1] - y[1] * dy[0]) / (f * f))
}

/// `V(x) = ∫ ρ(θ) dθ` by composite Gauss–Legendre with about `order` nodes.
pub fn fiber_volume(metric: &FinslerMetric, chart: usize, x: [f64; 2], order: usize) -> Result<f64> {
    let rule = circle_rule(order);
    let mut terms = Vec::with_capacity(rule.len());
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        terms.push(w * fiber_volume_form(metric, chart, x, *t)?);
    }
    Ok(pairwise_sum(&terms))
}

/// `V(x)` and `d log V` by central differences in the base coordinates.
pub fn log_volume_gradient(
    metric: &FinslerMetric,
    chart: usize,
    x: [f64; 2],
    order: usize,
    cfg: FdConfig,
) -> Result<(f64, [f64; 2])> {
    cfg.validate()?;
    let v = fiber_volume(metric, chart, x, order)?;
    let central = |a: usize, h: f64| -> Result<f64> {
        let (mut xp, mut xm) = (x, x);
        xp[a] += h;
        xm[a] -= h;
        Ok((fiber_volume(metric, chart, xp, order)?.ln() - fiber_volume(metric, chart, xm, order)?.ln()) / (2.0 * h))
    };
    let mut grad = [0.0; 2];
    for (a, g) in grad.iter_mut().enumerate() {
        let d1 = central(a, cfg.h)?;
        *g = if cfg.richardson { (4.0 * central(a, 0.5 * cfg.h)? - d1) / 3.0 } else { d1 };
    }
    Ok((v, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::Surface;
    use crate::metric::finsler::MetricSpec;
    use std::f64::consts::PI;

    fn bisection_radius(m: &FinslerMetric, x: [f64; 2], theta: f64) -> f64 {
        let (mut lo, mut hi) = (1e-6, 1e3);
        let u = [theta.cos(), theta.sin()];
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if m.eval(0, x, [mid * u[0], mid * u[1]]) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn euclidean_indicatrix_is_unit_circle() {
        let m = FinslerMetric::new(Surface::Plane, MetricSpec::Euclidean).unwrap();
        let ind = indicatrix_param(&m, 0, [0.0, 0.0]);
        for k in 0..8 {
            assert!((ind.radius(k as f64).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((fiber_volume(&m, 0, [0.0, 0.0], 64).unwrap() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn riemannian_axis_radius_and_volume() {
        let m = FinslerMetric::new(Surface::Torus, MetricSpec::Riemannian([[4.0, 0.0], [0.0, 1.0]])).unwrap();
        assert!((indicatrix_param(&m, 0, [1.0, 2.0]).radius(0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((fiber_volume(&m, 0, [1.0, 2.0], 64).unwrap() - 2.0 * PI).abs() < 1e-8);
        assert!((fiber_volume(&m, 0, [1.0, 2.0], 256).unwrap() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn randers_radius_matches_bisection() {
        let m = FinslerMetric::new(Surface::Sphere, MetricSpec::Randers(0.1)).unwrap();
        let x = [0.3, -0.5];
        let ind = indicatrix_param(&m, 0, x);
        for k in 0..16 {
            let t = k as f64 * 0.4;
            assert!((ind.radius(t).unwrap() - bisection_radius(&m, x, t)).abs() < 1e-10);
            let p = ind.point(t).unwrap();
            assert!((m.eval(0, x, p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn randers_volume_matches_induced_arc_length() {
        // length of θ ↦ y(θ) in the Riemannian metric g(x, y(θ)), tangent by
        // finite differences
        let m = FinslerMetric::new(Surface::Sphere, MetricSpec::Randers(0.1)).unwrap();
        let x = [0.6, 0.2];
        let v = fiber_volume(&m, 0, x, 64).unwrap();
        let ind = indicatrix_param(&m, 0, x);
        let rule = circle_rule(128);
        let h = 1e-3;
        let mut len = 0.0;
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let p = ind.point(*t).unwrap();
            let at = |s: f64| ind.point(t + s * h).unwrap();
            let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
            let d: Vec<f64> = (0..2).map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h)).collect();
            let g = m.fundamental_tensor(0, x, p).unwrap();
            len += w * g.apply(&d, &d).sqrt();
        }
        assert!((len - v).abs() < 1e-8, "{len} vs {v}");
        assert!((v - 2.0 * PI).abs() > 1e-4);
    }

    #[test]
    fn point_derivatives_match_finite_differences() {
        let m = FinslerMetric::new(Surface::Sphere, MetricSpec::Randers(0.2)).unwrap();
        let (x, t) = ([0.2, 0.7], 1.1);
        let p = indicatrix_point(&m, 0, x, t).unwrap();
        let h = 1e-6;
        let at = |x: [f64; 2], t: f64| indicatrix_param(&m, 0, x).point(t).unwrap();
        for a in 0..3 {
            let (mut xp, mut xm, mut tp, mut tm) = (x, x, t, t);
            if a < 2 {
                xp[a] += h;
                xm[a] -= h;
            } else {
                tp += h;
                tm -= h;
            }
            let (yp, ym) = (at(xp, tp), at(xm, tm));
            for i in 0..2 {
                assert!(((yp[i] - ym[i]) / (2.0 * h) - p.dy[a][i]).abs() < 1e-8);
            }
        }
    }
}
