//! Built-in surfaces: the two-chart stereographic sphere and the flat torus.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GbcError, Result};
use crate::metric::finsler::{FinslerMetric, MetricSpec};
use crate::metric::norm::{fundamental_tensor_of, homogeneity_defect};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    /// A single flat chart, for pointwise tests.
    Plane,
    Sphere,
    Torus,
}

/// A point `(x¹, x², θ)` of the sphere bundle in a given chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SbPoint {
    pub chart: usize,
    pub x: [f64; 2],
    pub theta: f64,
}

impl SbPoint {
    pub fn new(chart: usize, x: [f64; 2], theta: f64) -> Self {
        SbPoint { chart, x, theta }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x[0], self.x[1], self.theta]
    }

    pub fn with_coords(&self, c: &[f64]) -> Self {
        SbPoint { chart: self.chart, x: [c[0], c[1]], theta: c[2] }
    }
}

/// Region of one chart used by the base integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `|x| ≤ radius` around the chart origin.
    Disk { radius: f64 },
    /// `[x0, x0+w] × [y0, y0+h]`.
    Rect { x0: f64, y0: f64, w: f64, h: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atlas {
    pub surface: Surface,
    pub chart_names: Vec<&'static str>,
    /// Overlap-free cover of the surface, one region per chart.
    pub regions: Vec<Region>,
    pub euler_characteristic: i64,
}

pub fn sphere_atlas() -> Atlas {
    Atlas {
        surface: Surface::Sphere,
        chart_names: vec!["stereographic-north", "stereographic-south"],
        regions: vec![Region::Disk { radius: 1.0 }, Region::Disk { radius: 1.0 }],
        euler_characteristic: 2,
    }
}

pub fn torus_atlas() -> Atlas {
    Atlas {
        surface: Surface::Torus,
        chart_names: vec!["periodic"],
        regions: vec![Region::Rect { x0: 0.0, y0: 0.0, w: 2.0 * PI, h: 2.0 * PI }],
        euler_characteristic: 0,
    }
}

pub fn plane_atlas() -> Atlas {
    Atlas {
        surface: Surface::Plane,
        chart_names: vec!["plane"],
        regions: vec![Region::Rect { x0: -1.0, y0: -1.0, w: 2.0, h: 2.0 }],
        euler_characteristic: 1,
    }
}

pub fn atlas_for(surface: Surface) -> Atlas {
    match surface {
        Surface::Sphere => sphere_atlas(),
        Surface::Torus => torus_atlas(),
        Surface::Plane => plane_atlas(),
    }
}

impl Atlas {
    pub fn chart_count(&self) -> usize {
        self.chart_names.len()
    }

    /// Coordinates of `x` (in chart `from`) in chart `to`, when defined.
    pub fn transition(&self, from: usize, to: usize, x: [f64; 2]) -> Option<[f64; 2]> {
        if from == to {
            return Some(self.wrap(x));
        }
        match self.surface {
            Surface::Sphere => {
                // w = 1/z in complex notation, for either direction
                let r2 = x[0] * x[0] + x[1] * x[1];
                (r2 > 0.0).then(|| [x[0] / r2, -x[1] / r2])
            }
            _ => None,
        }
    }

    /// Jacobian `∂(to)/∂(from)` at `x`, row-major `[out][in]`.
    pub fn transition_jacobian(&self, from: usize, to: usize, x: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        if from == to {
            return Some([[1.0, 0.0], [0.0, 1.0]]);
        }
        match self.surface {
            Surface::Sphere => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 == 0.0 {
                    return None;
                }
                let r4 = r2 * r2;
                let (a, b) = ((x[1] * x[1] - x[0] * x[0]) / r4, -2.0 * x[0] * x[1] / r4);
                Some([[a, b], [-b, a]])
            }
            _ => None,
        }
    }

    /// Canonical representative of a chart point (periodic wrap on the torus).
    pub fn wrap(&self, x: [f64; 2]) -> [f64; 2] {
        match self.surface {
            Surface::Torus => [x[0].rem_euclid(2.0 * PI), x[1].rem_euclid(2.0 * PI)],
            _ => x,
        }
    }

    /// Embedding into `R³` (unit sphere) or `R⁴` (flat torus as a product of
    /// circles, last entry padded), with its Jacobian `[component][chart index]`.
    pub fn embedding(&self, chart: usize, x: [f64; 2]) -> ([f64; 4], [[f64; 2]; 4]) {
        match self.surface {
            Surface::Sphere => {
                let d = 1.0 + x[0] * x[0] + x[1] * x[1];
                let s = if chart == 0 { 1.0 } else { -1.0 };
                let p = [2.0 * x[0] / d, s * 2.0 * x[1] / d, s * (x[0] * x[0] + x[1] * x[1] - 1.0) / d, 0.0];
                let mut j = [[0.0; 2]; 4];
                for a in 0..2 {
                    // ∂/∂x^a of 2x_i/d and (|x|²−1)/d
                    let dd = 2.0 * x[a];
                    for (c, xi) in [(0usize, 0usize), (1, 1)] {
                        let num = 2.0 * x[xi];
                        let dnum = if a == xi { 2.0 } else { 0.0 };
                        let v = (dnum * d - num * dd) / (d * d);
                        j[c][a] = if c == 1 { s * v } else { v };
                    }
                    let num = x[0] * x[0] + x[1] * x[1] - 1.0;
                    j[2][a] = s * (dd * d - num * dd) / (d * d);
                }
                (p, j)
            }
            Surface::Torus => {
                let (c0, s0, c1, s1) = (x[0].cos(), x[0].sin(), x[1].cos(), x[1].sin());
                ([c0, s0, c1, s1], [[-s0, 0.0], [c0, 0.0], [0.0, -s1], [0.0, c1]])
            }
            Surface::Plane => ([x[0], x[1], 0.0, 0.0], [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]),
        }
    }

    /// A uniformly drawn point of some chart region.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> (usize, [f64; 2]) {
        let chart = rng.gen_range(0..self.chart_count());
        let x = match self.regions[chart] {
            Region::Disk { radius } => {
                let r = radius * rng.gen::<f64>().sqrt();
                let t = rng.gen_range(0.0..2.0 * PI);
                [r * t.cos(), r * t.sin()]
            }
            Region::Rect { x0, y0, w, h } => [x0 + w * rng.gen::<f64>(), y0 + h * rng.gen::<f64>()],
        };
        (chart, x)
    }
}

/// Builds a metric on the atlas and certifies it before use.
pub fn install_metric(atlas: &Atlas, spec: MetricSpec) -> Result<FinslerMetric> {
    let metric = FinslerMetric::new(atlas.surface, spec)?;
    certify(atlas, &metric, 400, 0x5eed)?;
    Ok(metric)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Certification {
    pub samples: usize,
    pub worst_homogeneity: f64,
    pub min_eigenvalue: f64,
    pub worst_transition: f64,
    pub worst_beta_norm: f64,
}

/// Checks the Minkowski axioms, the Randers bound and chart compatibility on
/// random samples; fails fast on the first violation.
pub fn certify(atlas: &Atlas, metric: &FinslerMetric, samples: usize, seed: u64) -> Result<Certification> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cert = Certification { samples, min_eigenvalue: f64::INFINITY, ..Default::default() };
    for _ in 0..samples {
        let (chart, x) = atlas.sample_point(&mut rng);
        let t = rng.gen_range(0.0..2.0 * PI);
        let y = [t.cos() * rng.gen_range(0.2..3.0), t.sin() * rng.gen_range(0.2..3.0)];
        let lambda = rng.gen_range(0.1..10.0);
        let fiber = metric.fiber(chart, x);
        let h = homogeneity_defect(&fiber, &y, lambda);
        cert.worst_homogeneity = cert.worst_homogeneity.max(h);
        if h > 1e-10 {
            return Err(GbcError::InvalidMetric(format!("homogeneity defect {h:e} at x = {x:?}")));
        }
        let ev = fundamental_tensor_of(&fiber, &y)?.min_eigenvalue();
        cert.min_eigenvalue = cert.min_eigenvalue.min(ev);
        if ev <= 0.0 {
            return Err(GbcError::InvalidMetric(format!("fundamental tensor not positive definite at x = {x:?}")));
        }
        if let Some(b) = metric.randers_beta_norm(chart, x) {
            cert.worst_beta_norm = cert.worst_beta_norm.max(b);
            if b >= 1.0 {
                return Err(GbcError::InvalidMetric(format!("‖β‖_α = {b} ≥ 1 at x = {x:?}")));
            }
        }
        for other in 0..atlas.chart_count() {
            if other == chart {
                continue;
            }
            if let (Some(x2), Some(j)) = (atlas.transition(chart, other, x), atlas.transition_jacobian(chart, other, x)) {
                let y2 = [j[0][0] * y[0] + j[0][1] * y[1], j[1][0] * y[0] + j[1][1] * y[1]];
                let f1 = metric.eval(chart, x, y);
                let d = (metric.eval(other, x2, y2) - f1).abs() / f1;
                cert.worst_transition = cert.worst_transition.max(d);
                if d > 1e-8 {
                    return Err(GbcError::InvalidMetric(format!("charts {chart}/{other} disagree by {d:e} at x = {x:?}")));
                }
            }
        }
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_transition_round_trip_and_orientation() {
        let atlas = sphere_atlas();
        for x in [[0.3, 0.4], [1.0, 0.0], [-0.7, 2.0], [0.01, -0.02]] {
            let w = atlas.transition(0, 1, x).unwrap();
            let back = atlas.transition(1, 0, w).unwrap();
            assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
            let j = atlas.transition_jacobian(0, 1, x).unwrap();
            assert!(j[0][0] * j[1][1] - j[0][1] * j[1][0] > 0.0);
        }
    }

    #[test]
    fn sphere_embedding_agrees_across_charts() {
        let atlas = sphere_atlas();
        let x = [0.4, -0.3];
        let (p, j) = atlas.embedding(0, x);
        let (q, _) = atlas.embedding(1, atlas.transition(0, 1, x).unwrap());
        for c in 0..3 {
            assert!((p[c] - q[c]).abs() < 1e-14);
        }
        assert!((p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - 1.0).abs() < 1e-14);
        let h = 1e-6;
        for a in 0..2 {
            let (mut xp, mut xm) = (x, x);
            xp[a] += h;
            xm[a] -= h;
            let (pp, pm) = (atlas.embedding(0, xp).0, atlas.embedding(0, xm).0);
            for c in 0..3 {
                assert!(((pp[c] - pm[c]) / (2.0 * h) - j[c][a]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn torus_wrap_is_periodic() {
        let atlas = torus_atlas();
        let w = atlas.wrap([-0.5, 2.0 * PI + 0.25]);
        assert!((w[0] - (2.0 * PI - 0.5)).abs() < 1e-14 && (w[1] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn zoo_metrics_certify() {
        for spec in [MetricSpec::RoundSphere, MetricSpec::Randers(0.1), MetricSpec::Randers(0.5)] {
            install_metric(&sphere_atlas(), spec).unwrap();
        }
        for spec in [
            MetricSpec::FlatTorus,
            MetricSpec::Euclidean,
            MetricSpec::Randers(0.1),
            MetricSpec::Quartic(0.05),
            MetricSpec::Riemannian([[2.0, 0.3], [0.3, 1.0]]),
        ] {
            install_metric(&torus_atlas(), spec).unwrap();
        }
    }

    #[test]
    fn round_sphere_has_unit_gauss_curvature() {
        // K = −Δ(log λ)/λ² for the conformal metric λ²|dx|²
        let metric = FinslerMetric::new(Surface::Sphere, MetricSpec::RoundSphere).unwrap();
        let log_lambda = |x: [f64; 2]| 0.5 * metric.eval(0, x, [1.0, 0.0]).powi(2).ln();
        let h = 1e-3;
        for x in [[0.2, 0.1], [0.9, -0.4]] {
            let c = log_lambda(x);
            let lap = (log_lambda([x[0] + h, x[1]]) + log_lambda([x[0] - h, x[1]]) + log_lambda([x[0], x[1] + h])
                + log_lambda([x[0], x[1] - h])
                - 4.0 * c)
                / (h * h);
            let k = -lap / c.exp().powi(2);
            assert!((k - 1.0).abs() < 1e-5);
        }
    }
}
