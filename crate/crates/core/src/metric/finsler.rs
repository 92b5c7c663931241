//! Chart-local Finsler metrics on surfaces and their derivative jets.

use crate::ad::{seed3, Partials3, Real, D3};
use crate::error::{GbcError, Result};
use crate::manifolds::Surface;
use crate::metric::norm::{cartan_tensor_of, fundamental_tensor_of, CartanTensor, FundamentalTensor, NormLike};

/// Built-in metrics, keyed by the identifiers accepted in config files.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    /// Constant symmetric positive-definite `G`.
    Riemannian([[f64; 2]; 2]),
    RoundSphere,
    FlatTorus,
    /// `α + β` with `α` the natural Riemannian metric of the surface and
    /// `‖β‖_α ≤ eps`.
    Randers(f64),
    /// `F⁴ = Σ yᵢ⁴ + eps (Σ yᵢ²)²`.
    Quartic(f64),
}

impl MetricSpec {
    pub fn id(&self) -> String {
        match self {
            MetricSpec::Euclidean => "euclidean".into(),
            MetricSpec::Riemannian(g) => format!("riemannian({},{},{})", g[0][0], g[0][1], g[1][1]),
            MetricSpec::RoundSphere => "round_sphere".into(),
            MetricSpec::FlatTorus => "flat_torus".into(),
            MetricSpec::Randers(e) => format!("randers({e})"),
            MetricSpec::Quartic(e) => format!("quartic({e})"),
        }
    }

    /// Every built-in metric with representative parameters.
    pub fn zoo() -> Vec<MetricSpec> {
        vec![
            MetricSpec::Euclidean,
            MetricSpec::Riemannian([[2.0, 0.3], [0.3, 1.0]]),
            MetricSpec::RoundSphere,
            MetricSpec::FlatTorus,
            MetricSpec::Randers(0.1),
            MetricSpec::Randers(0.5),
            MetricSpec::Quartic(0.5),
        ]
    }

    pub fn is_riemannian(&self) -> bool {
        match self {
            MetricSpec::Randers(e) => *e == 0.0,
            MetricSpec::Quartic(_) => false,
            _ => true,
        }
    }
}

impl std::str::FromStr for MetricSpec {
    type Err = GbcError;

    /// Parses the identifiers produced by [`MetricSpec::id`].
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once('(') {
            Some((name, rest)) => {
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| GbcError::Config(format!("unbalanced parentheses in metric `{s}`")))?;
                let args = inner
                    .split(',')
                    .map(|a| a.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|e| GbcError::Config(format!("bad parameter in metric `{s}`: {e}")))?;
                (name.trim(), args)
            }
            None => (s, Vec::new()),
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(GbcError::Config(format!("metric `{name}` takes {n} parameter(s), got {}", args.len())))
            }
        };
        match name {
            "euclidean" => arity(0).map(|_| MetricSpec::Euclidean),
            "round_sphere" => arity(0).map(|_| MetricSpec::RoundSphere),
            "flat_torus" => arity(0).map(|_| MetricSpec::FlatTorus),
            "randers" => arity(1).map(|_| MetricSpec::Randers(args[0])),
            "quartic" => arity(1).map(|_| MetricSpec::Quartic(args[0])),
            "riemannian" => arity(3).map(|_| MetricSpec::Riemannian([[args[0], args[1]], [args[1], args[2]]])),
            other => Err(GbcError::Config(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinslerMetric {
    surface: Surface,
    spec: MetricSpec,
    /// `+1` when chart orientation agrees with the surface orientation.
    orientation: f64,
}

/// Conformal factor of the round metric in either stereographic chart.
#[inline]
fn stereo_lambda<T: Real>(x: [T; 2]) -> T {
    T::cst(2.0) / (T::one() + x[0] * x[0] + x[1] * x[1])
}

impl FinslerMetric {
    pub fn new(surface: Surface, spec: MetricSpec) -> Result<Self> {
        let ok = match (&spec, surface) {
            (MetricSpec::RoundSphere, s) => s == Surface::Sphere,
            (MetricSpec::Randers(_), _) => true,
            (_, s) => s != Surface::Sphere,
        };
        if !ok {
            return Err(GbcError::Config(format!("metric `{}` is not defined on the {surface:?}", spec.id())));
        }
        match spec {
            MetricSpec::Riemannian(g) => {
                if g[0][1] != g[1][0] || g[0][0] <= 0.0 || g[0][0] * g[1][1] - g[0][1] * g[1][0] <= 0.0 {
                    return Err(GbcError::InvalidMetric(format!("riemannian matrix {g:?} is not symmetric positive definite")));
                }
            }
            MetricSpec::Randers(eps) if !(0.0..1.0).contains(&eps) => {
                return Err(GbcError::InvalidMetric(format!("Randers eps = {eps} must lie in [0, 1)")));
            }
            MetricSpec::Quartic(eps) if eps < 0.0 => {
                return Err(GbcError::InvalidMetric(format!("quartic eps = {eps} must be non-negative")));
            }
            _ => {}
        }
        Ok(FinslerMetric { surface, spec, orientation: 1.0 })
    }

    pub fn surface(&self) -> Surface {
        self.surface
    }

    pub fn spec(&self) -> &MetricSpec {
        &self.spec
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn is_riemannian(&self) -> bool {
        self.spec.is_riemannian()
    }

    /// The 1-form β of a Randers metric at `x`, as chart components.
    fn randers_beta<T: Real>(&self, chart: usize, x: [T; 2], eps: f64) -> [T; 2] {
        match self.surface {
            Surface::Sphere => {
                let l = stereo_lambda(x);
                let l2 = (l * l).scale(eps);
                // β = eps·α(K,·) with K the rotation field about the polar axis
                if chart == 0 {
                    [-x[1] * l2, x[0] * l2]
                } else {
                    [x[1] * l2, -x[0] * l2]
                }
            }
            Surface::Torus => {
                let c = eps / std::f64::consts::SQRT_2;
                [x[1].cos().scale(c), x[0].sin().scale(c)]
            }
            Surface::Plane => [T::cst(eps), T::zero()],
        }
    }

    /// `α(y,y)` for the Riemannian part of the surface.
    fn alpha_sq<T: Real>(&self, x: [T; 2], y: [T; 2]) -> T {
        let e = y[0] * y[0] + y[1] * y[1];
        match self.surface {
            Surface::Sphere => {
                let l = stereo_lambda(x);
                l * l * e
            }
            _ => e,
        }
    }

    /// `‖β‖_α` for Randers metrics, `None` otherwise.
    pub fn randers_beta_norm(&self, chart: usize, x: [f64; 2]) -> Option<f64> {
        let MetricSpec::Randers(eps) = self.spec else { return None };
        let b = self.randers_beta(chart, x, eps);
        let scale = match self.surface {
            Surface::Sphere => stereo_lambda(x),
            _ => 1.0,
        };
        Some((b[0] * b[0] + b[1] * b[1]).sqrt() / scale)
    }

    pub fn f_sq<T: Real>(&self, chart: usize, x: [T; 2], y: [T; 2]) -> T {
        match self.spec {
            MetricSpec::Euclidean | MetricSpec::FlatTorus => y[0] * y[0] + y[1] * y[1],
            MetricSpec::Riemannian(g) => {
                y[0] * y[0].scale(g[0][0]) + (y[0] * y[1]).scale(2.0 * g[0][1]) + y[1] * y[1].scale(g[1][1])
            }
            MetricSpec::RoundSphere => self.alpha_sq(x, y),
            MetricSpec::Quartic(eps) => {
                let s2 = y[0] * y[0] + y[1] * y[1];
                let s4 = y[0] * y[0] * y[0] * y[0] + y[1] * y[1] * y[1] * y[1];
                (s4 + (s2 * s2).scale(eps)).sqrt()
            }
            MetricSpec::Randers(_) => {
                let f = self.f(chart, x, y);
                f * f
            }
        }
    }

    pub fn f<T: Real>(&self, chart: usize, x: [T; 2], y: [T; 2]) -> T {
        match self.spec {
            MetricSpec::Randers(eps) => {
                let b = self.randers_beta(chart, x, eps);
                self.alpha_sq(x, y).sqrt() + b[0] * y[0] + b[1] * y[1]
            }
            _ => self.f_sq(chart, x, y).sqrt(),
        }
    }

    pub fn eval(&self, chart: usize, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.f(chart, x, y)
    }

    /// Derivatives of `F²` up to third order in `y` and first order in `x`,
    /// from ten third-order dual evaluations.
    pub fn jet(&self, chart: usize, x: [f64; 2], y: [f64; 2]) -> Result<MetricJet> {
        if y == [0.0, 0.0] {
            return Err(GbcError::Domain("metric jet requested at y = 0".into()));
        }
        let base = [x[0], x[1], y[0], y[1]];
        let eval = |i: usize, j: usize, k: usize| -> Partials3 {
            let v: [D3; 4] = std::array::from_fn(|m| {
                seed3(base[m], (m == i) as u8 as f64, (m == j) as u8 as f64, (m == k) as u8 as f64)
            });
            Partials3::from(self.f_sq(chart, [v[0], v[1]], [v[2], v[3]]))
        };
        let mut jet = MetricJet::default();
        for (a, b) in [(0usize, 0usize), (0, 1), (1, 1)] {
            for c in b..2 {
                let p = eval(2 + a, 2 + b, 2 + c);
                jet.f2 = p.f;
                jet.y[a] = p.d1;
                jet.y[c] = p.d3;
                jet.yy[a][b] = p.d12;
                jet.yy[b][a] = p.d12;
                jet.yy[a][c] = p.d13;
                jet.yy[c][a] = p.d13;
                jet.yy[b][c] = p.d23;
                jet.yy[c][b] = p.d23;
                for (i, j, k) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                    jet.yyy[i][j][k] = p.d123;
                }
            }
            for xa in 0..2 {
                let p = eval(2 + a, 2 + b, xa);
                jet.x[xa] = p.d3;
                jet.xy[xa][a] = p.d13;
                jet.xy[xa][b] = p.d23;
                jet.xyy[xa][a][b] = p.d123;
                jet.xyy[xa][b][a] = p.d123;
            }
        }
        jet.f = jet.f2.sqrt();
        Ok(jet)
    }

    /// The fiber norm `F(x,·)` on one tangent plane.
    pub fn fiber(&self, chart: usize, x: [f64; 2]) -> FiberNorm<'_> {
        FiberNorm { metric: self, chart, x }
    }

    pub fn fundamental_tensor(&self, chart: usize, x: [f64; 2], y: [f64; 2]) -> Result<FundamentalTensor> {
        fundamental_tensor_of(&self.fiber(chart, x), &y)
    }

    pub fn cartan_tensor(&self, chart: usize, x: [f64; 2], y: [f64; 2]) -> Result<CartanTensor> {
        cartan_tensor_of(&self.fiber(chart, x), &y)
    }
}

/// `F(x,·)` with `x` frozen.
#[derive(Clone, Copy, Debug)]
pub struct FiberNorm<'a> {
    metric: &'a FinslerMetric,
    chart: usize,
    x: [f64; 2],
}

impl NormLike for FiberNorm<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn eval<T: Real>(&self, y: &[T]) -> T {
        self.metric.f(self.chart, [T::cst(self.x[0]), T::cst(self.x[1])], [y[0], y[1]])
    }

    fn eval_sq<T: Real>(&self, y: &[T]) -> T {
        self.metric.f_sq(self.chart, [T::cst(self.x[0]), T::cst(self.x[1])], [y[0], y[1]])
    }
}

/// Partial derivatives of `F²` at one point of the slit tangent bundle.
/// Index order is `[x-index][y-index]…`.
#[derive(Clone, Copy, Debug, Default)]
pub struct MetricJet {
    pub f: f64,
    pub f2: f64,
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub xy: [[f64; 2]; 2],
    pub yy: [[f64; 2]; 2],
    pub yyy: [[[f64; 2]; 2]; 2],
    pub xyy: [[[f64; 2]; 2]; 2],
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ad::hessian;

    #[test]
    fn jet_matches_generic_derivatives() {
        let m = FinslerMetric::new(Surface::Sphere, MetricSpec::Randers(0.3)).unwrap();
        let x = [0.4, -0.7];
        let y = [0.9, 0.35];
        let jet = m.jet(0, x, y).unwrap();
        let (v, grad, h) = hessian(&[x[0], x[1], y[0], y[1]], |v| m.f_sq(0, [v[0], v[1]], [v[2], v[3]]));
        assert!((v - jet.f2).abs() < 1e-14);
        for a in 0..2 {
            assert!((grad[a] - jet.x[a]).abs() < 1e-13);
            assert!((grad[2 + a] - jet.y[a]).abs() < 1e-13);
            for b in 0..2 {
                assert!((h[a][2 + b] - jet.xy[a][b]).abs() < 1e-13);
                assert!((h[2 + a][2 + b] - jet.yy[a][b]).abs() < 1e-13);
            }
        }
        let t = crate::ad::third_derivatives(&[x[0], x[1], y[0], y[1]], |v| m.f_sq(0, [v[0], v[1]], [v[2], v[3]]));
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!((t[2 + i][2 + j][2 + k] - jet.yyy[i][j][k]).abs() < 1e-12);
                    assert!((t[i][2 + j][2 + k] - jet.xyy[i][j][k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sphere_only_metrics_are_checked() {
        assert!(FinslerMetric::new(Surface::Torus, MetricSpec::RoundSphere).is_err());
        assert!(FinslerMetric::new(Surface::Sphere, MetricSpec::Euclidean).is_err());
        assert!(FinslerMetric::new(Surface::Sphere, MetricSpec::Randers(1.0)).is_err());
    }

    #[test]
    fn randers_beta_norm_bounded_by_eps() {
        let m = FinslerMetric::new(Surface::Sphere, MetricSpec::Randers(0.1)).unwrap();
        for x in [[0.0, 0.0], [1.0, 0.0], [0.3, -0.9], [5.0, 2.0]] {
            let b = m.randers_beta_norm(0, x).unwrap();
            assert!(b <= 0.1 + 1e-15);
        }
        assert!((m.randers_beta_norm(1, [1.0, 0.0]).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn metric_ids_round_trip() {
        for spec in MetricSpec::zoo() {
            assert_eq!(spec.id().parse::<MetricSpec>().unwrap(), spec);
        }
        assert_eq!(" randers( 0.25 ) ".parse::<MetricSpec>().unwrap(), MetricSpec::Randers(0.25));
        assert!("randers".parse::<MetricSpec>().is_err());
        assert!("finsler(1)".parse::<MetricSpec>().is_err());
        assert!("quartic(x)".parse::<MetricSpec>().is_err());
    }
}
