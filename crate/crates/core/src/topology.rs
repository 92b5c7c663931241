//! Vector fields with isolated zeros, their local degrees, and the induced
//! section `[X]` of the sphere bundle.

use std::f64::consts::PI;
use std::sync::Arc;

use exmex::prelude::*;
use exmex::{Differentiate, FlatEx};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ad::{Dual, Real, D1};
use crate::error::{GbcError, Result};
use crate::manifolds::{Atlas, Region, Surface};
use crate::quadrature::Section;

/// Built-in and user-defined vector fields.
///
/// On the sphere, `stereographic_power(k)` is `z^k ∂_z` in chart 0 and
/// `−w^{2−k} ∂_w` in chart 1 (`w = 1/z`), so it has a zero of degree `k` at the
/// chart-0 origin and one of degree `2−k` at the chart-1 origin. Custom fields
/// are given in chart-0 coordinates `u, v` and pushed forward to chart 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum VectorFieldSpec {
    Rotational,
    HeightGradient,
    Constant { value: [f64; 2] },
    StereographicPower { k: u32 },
    Custom { x: String, y: String },
}

impl VectorFieldSpec {
    pub fn id(&self) -> String {
        match self {
            VectorFieldSpec::Rotational => "rotational".into(),
            VectorFieldSpec::HeightGradient => "height_gradient".into(),
            VectorFieldSpec::Constant { value } => format!("constant({},{})", value[0], value[1]),
            VectorFieldSpec::StereographicPower { k } => format!("stereographic_power({k})"),
            VectorFieldSpec::Custom { x, y } => format!("custom({x};{y})"),
        }
    }
}

#[derive(Clone, Debug)]
struct Expr {
    value: FlatEx<f64>,
    partials: [Option<FlatEx<f64>>; 2],
}

fn bind(ex: &FlatEx<f64>, u: f64, v: f64) -> Result<f64> {
    let vars: Vec<f64> = ex
        .var_names()
        .iter()
        .map(|n| match n.as_str() {
            "u" => Ok(u),
            "v" => Ok(v),
            other => Err(GbcError::Config(format!("unknown variable `{other}` (use u, v)"))),
        })
        .collect::<Result<_>>()?;
    ex.eval(&vars).map_err(|e| GbcError::Domain(format!("custom field evaluation: {e}")))
}

impl Expr {
    fn parse(text: &str) -> Result<Self> {
        let value = exmex::parse::<f64>(text).map_err(|e| GbcError::Config(format!("cannot parse `{text}`: {e}")))?;
        let names: Vec<String> = value.var_names().to_vec();
        if let Some(bad) = names.iter().find(|n| *n != "u" && *n != "v") {
            return Err(GbcError::Config(format!("unknown variable `{bad}` in `{text}` (use u, v)")));
        }
        let mut partials = [None, None];
        for (a, name) in ["u", "v"].iter().enumerate() {
            if let Some(i) = names.iter().position(|n| n == name) {
                let d = value
                    .clone()
                    .partial(i)
                    .map_err(|e| GbcError::Config(format!("cannot differentiate `{text}`: {e}")))?;
                partials[a] = Some(d);
            }
        }
        Ok(Expr { value, partials })
    }

    fn jet(&self, u: f64, v: f64) -> Result<(f64, [f64; 2])> {
        let mut grad = [0.0; 2];
        for (g, p) in grad.iter_mut().zip(&self.partials) {
            if let Some(p) = p {
                *g = bind(p, u, v)?;
            }
        }
        Ok((bind(&self.value, u, v)?, grad))
    }
}

fn cmul<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn cpow<T: Real>(z: [T; 2], k: u32) -> [T; 2] {
    let mut acc = [T::one(), T::zero()];
    for _ in 0..k {
        acc = cmul(acc, z);
    }
    acc
}

/// A vector field on every chart of an atlas.
#[derive(Clone, Debug)]
pub struct SectionField {
    pub atlas: Atlas,
    pub spec: VectorFieldSpec,
    custom: Option<Arc<[Expr; 2]>>,
}

impl SectionField {
    pub fn new(atlas: Atlas, spec: VectorFieldSpec) -> Result<Self> {
        let s = atlas.surface;
        let unsupported = |what: &str| Err(GbcError::Config(format!("{what} field is not available on {s:?}")));
        match (&spec, s) {
            (VectorFieldSpec::Constant { .. }, Surface::Sphere) => return unsupported("constant"),
            (VectorFieldSpec::StereographicPower { .. }, Surface::Torus | Surface::Plane) => {
                return unsupported("stereographic_power")
            }
            (VectorFieldSpec::Rotational, Surface::Torus) => return unsupported("rotational"),
            (VectorFieldSpec::StereographicPower { k }, Surface::Sphere) if *k > 2 => {
                return Err(GbcError::Config(format!("stereographic_power({k}) has a pole; use 0 ≤ k ≤ 2")))
            }
            _ => {}
        }
        let custom = match &spec {
            VectorFieldSpec::Custom { x, y } => Some(Arc::new([Expr::parse(x)?, Expr::parse(y)?])),
            _ => None,
        };
        Ok(SectionField { atlas, spec, custom })
    }

    fn builtin<T: Real>(&self, chart: usize, x: [T; 2]) -> [T; 2] {
        match (self.atlas.surface, &self.spec) {
            (Surface::Sphere, VectorFieldSpec::Rotational) => {
                if chart == 0 {
                    [-x[1], x[0]]
                } else {
                    [x[1], -x[0]]
                }
            }
            (Surface::Sphere, VectorFieldSpec::HeightGradient) => self.stereographic(chart, x, 1),
            (Surface::Sphere, VectorFieldSpec::StereographicPower { k }) => self.stereographic(chart, x, *k),
            (_, VectorFieldSpec::Constant { value }) => [T::cst(value[0]), T::cst(value[1])],
            // gradient of the height cos x¹ + cos x² of the flat torus
            (Surface::Torus, VectorFieldSpec::HeightGradient) => [-x[0].sin(), -x[1].sin()],
            (Surface::Plane, VectorFieldSpec::Rotational) => [-x[1], x[0]],
            (Surface::Plane, VectorFieldSpec::HeightGradient) => [x[0], x[1]],
            _ => unreachable!("rejected in SectionField::new"),
        }
    }

    fn stereographic<T: Real>(&self, chart: usize, x: [T; 2], k: u32) -> [T; 2] {
        if chart == 0 {
            cpow(x, k)
        } else {
            let p = cpow(x, 2 - k);
            [-p[0], -p[1]]
        }
    }

    fn custom_chart0(&self, x: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let e = self.custom.as_ref().expect("custom field");
        let (a, da) = e[0].jet(x[0], x[1])?;
        let (b, db) = e[1].jet(x[0], x[1])?;
        Ok(([a, b], [da, db]))
    }

    /// `X(x)` and `J[i][a] = ∂X^i/∂x^a` in chart coordinates.
    pub fn jet(&self, chart: usize, x: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
        if chart >= self.atlas.chart_count() {
            return Err(GbcError::Domain(format!("chart {chart} out of range")));
        }
        let (v, j) = if self.custom.is_some() {
            if chart == 0 || self.atlas.surface != Surface::Sphere {
                self.custom_chart0(x)?
            } else {
                self.custom_pushforward(x)?
            }
        } else {
            let mut j = [[0.0; 2]; 2];
            let mut v = [0.0; 2];
            for a in 0..2 {
                let arg = [
                    D1::new(x[0], (a == 0) as u8 as f64),
                    D1::new(x[1], (a == 1) as u8 as f64),
                ];
                let out: [Dual<f64>; 2] = self.builtin(chart, arg);
                v = [out[0].re, out[1].re];
                j[0][a] = out[0].eps;
                j[1][a] = out[1].eps;
            }
            (v, j)
        };
        if !(v.iter().chain(j.iter().flatten()).all(|c| c.is_finite())) {
            return Err(GbcError::Domain(format!("vector field not finite at chart {chart}, x = {x:?}")));
        }
        Ok((v, j))
    }

    /// `X₁(w) = −w² X₀(1/w)` in complex notation, with its Jacobian.
    fn custom_pushforward(&self, w: [f64; 2]) -> Result<([f64; 2], [[f64; 2]; 2])> {
        let wc = Complex64::new(w[0], w[1]);
        if wc.norm() == 0.0 {
            return Err(GbcError::Domain("custom field pushforward at the chart-1 origin".into()));
        }
        let z = wc.inv();
        let (y, jy) = self.custom_chart0([z.re, z.im])?;
        let yc = Complex64::new(y[0], y[1]);
        let value = -wc * wc * yc;
        let mut jac = [[0.0; 2]; 2];
        let dw2 = [2.0 * wc, Complex64::new(0.0, 2.0) * wc];
        let dz = [-z * z, Complex64::new(0.0, -1.0) * z * z];
        for a in 0..2 {
            let dy = Complex64::new(jy[0][0] * dz[a].re + jy[0][1] * dz[a].im, jy[1][0] * dz[a].re + jy[1][1] * dz[a].im);
            let d = -dw2[a] * yc - wc * wc * dy;
            jac[0][a] = d.re;
            jac[1][a] = d.im;
        }
        Ok(([value.re, value.im], jac))
    }

    pub fn eval(&self, chart: usize, x: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.jet(chart, x)?.0)
    }
}

/// An isolated zero of a vector field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroRecord {
    pub chart: usize,
    pub location: [f64; 2],
    pub degree: i64,
    pub epsilon_schedule: Vec<f64>,
}

/// Zeros found by a grid scan, plus local minima where Newton failed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZeroScan {
    pub zeros: Vec<ZeroRecord>,
    pub unresolved: Vec<(usize, [f64; 2])>,
}

fn norm2(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

fn newton(field: &SectionField, chart: usize, mut x: [f64; 2]) -> Option<[f64; 2]> {
    for _ in 0..200 {
        let (v, j) = field.jet(chart, x).ok()?;
        if norm2(v) < 1e-12 {
            return Some(x);
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let step = [(j[1][1] * v[0] - j[0][1] * v[1]) / det, (-j[1][0] * v[0] + j[0][0] * v[1]) / det];
        x = [x[0] - step[0], x[1] - step[1]];
        if norm2(x) > 1e6 {
            return None;
        }
    }
    None
}

fn in_region(region: &Region, x: [f64; 2]) -> bool {
    match *region {
        Region::Disk { radius } => norm2(x) <= radius * (1.0 + 1e-12),
        Region::Rect { x0, y0, w, h } => x[0] >= x0 && x[0] <= x0 + w && x[1] >= y0 && x[1] <= y0 + h,
    }
}

/// Grid scan of every chart region for minima of `|X|`, Newton refinement to
/// `|X| < 1e−12`, and deduplication across charts.
pub fn find_zeros(field: &SectionField, grid: usize, epsilon_schedule: &[f64]) -> Result<ZeroScan> {
    let atlas = &field.atlas;
    let mut scan = ZeroScan::default();
    let mut found: Vec<(usize, [f64; 2], [f64; 4])> = Vec::new();
    for chart in 0..atlas.chart_count() {
        let region = atlas.regions[chart];
        let (lo, hi) = match region {
            Region::Disk { radius } => ([-1.1 * radius; 2], [1.1 * radius; 2]),
            Region::Rect { x0, y0, w, h } => ([x0, y0], [x0 + w, y0 + h]),
        };
        let g = grid.max(4);
        let pt = |i: usize, j: usize| {
            [lo[0] + (hi[0] - lo[0]) * i as f64 / (g - 1) as f64, lo[1] + (hi[1] - lo[1]) * j as f64 / (g - 1) as f64]
        };
        let mut mag = vec![vec![f64::INFINITY; g]; g];
        let mut scale = 0.0f64;
        for (i, row) in mag.iter_mut().enumerate() {
            for (j, m) in row.iter_mut().enumerate() {
                if let Ok(v) = field.eval(chart, pt(i, j)) {
                    *m = norm2(v);
                    scale = scale.max(*m);
                }
            }
        }
        for i in 0..g {
            for j in 0..g {
                let m = mag[i][j];
                let is_min = (i.saturating_sub(1)..=(i + 1).min(g - 1))
                    .all(|a| (j.saturating_sub(1)..=(j + 1).min(g - 1)).all(|b| mag[a][b] >= m));
                if !is_min || !m.is_finite() {
                    continue;
                }
                match newton(field, chart, pt(i, j)) {
                    Some(z) => {
                        let z = atlas.wrap(z);
                        if !in_region(&region, z) {
                            continue;
                        }
                        let (p, _) = atlas.embedding(chart, z);
                        if found.iter().any(|(_, _, q)| (0..4).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>().sqrt() < 1e-6) {
                            continue;
                        }
                        found.push((chart, z, p));
                    }
                    None if m < 1e-2 * scale => scan.unresolved.push((chart, pt(i, j))),
                    None => {}
                }
            }
        }
    }
    for (k, &(chart, z, p)) in found.iter().enumerate() {
        let sep = found
            .iter()
            .enumerate()
            .filter(|(l, _)| *l != k)
            .map(|(_, (_, _, q))| (0..4).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        let radius = (0.25 * sep).min(0.05);
        let degree = local_degree(field, chart, z, radius)?;
        scan.zeros.push(ZeroRecord { chart, location: z, degree, epsilon_schedule: epsilon_schedule.to_vec() });
    }
    Ok(scan)
}

/// Winding number of `X/|X|` along the circle of the given radius around
/// `center`, by accumulating wrapped angle increments.
pub fn local_degree(field: &SectionField, chart: usize, center: [f64; 2], radius: f64) -> Result<i64> {
    let mut samples = 256usize;
    loop {
        let mut prev: Option<f64> = None;
        let mut total = 0.0;
        let mut worst = 0.0f64;
        for s in 0..=samples {
            let t = 2.0 * PI * s as f64 / samples as f64;
            let x = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
            let v = field.eval(chart, x)?;
            if norm2(v) == 0.0 {
                return Err(GbcError::Topology(format!("zero on the degree circle of radius {radius} at {x:?}")));
            }
            let a = v[1].atan2(v[0]);
            match prev {
                None => {}
                Some(p) => {
                    let mut d = a - p;
                    d -= 2.0 * PI * (d / (2.0 * PI)).round();
                    worst = worst.max(d.abs());
                    total += d;
                }
            }
            prev = Some(a);
        }
        if worst < 0.5 * PI {
            let w = total / (2.0 * PI);
            let k = w.round();
            if (w - k).abs() > 1e-6 {
                return Err(GbcError::Topology(format!("winding {w} is not an integer")));
            }
            return Ok(k as i64);
        }
        if samples >= 1 << 16 {
            return Err(GbcError::Topology(format!("angle increments stay above π/2 at {samples} samples")));
        }
        samples *= 2;
    }
}

pub fn poincare_hopf_sum(records: &[ZeroRecord]) -> i64 {
    records.iter().map(|r| r.degree).sum()
}

/// Fails with a topology error unless the degrees sum to `chi`.
pub fn check_poincare_hopf(records: &[ZeroRecord], chi: i64) -> Result<i64> {
    let s = poincare_hopf_sum(records);
    if s != chi {
        return Err(GbcError::Topology(format!("degree sum {s} differs from Euler characteristic {chi}")));
    }
    Ok(s)
}

/// The fiber angle `θ` of `X(x)` and its gradient `∂θ/∂x`.
pub fn induced_section(field: &SectionField, chart: usize, x: [f64; 2]) -> Result<(f64, [f64; 2])> {
    let (v, j) = field.jet(chart, x)?;
    let r2 = v[0] * v[0] + v[1] * v[1];
    if !(r2 > 0.0) {
        return Err(GbcError::Domain(format!("vector field vanishes at chart {chart}, x = {x:?}")));
    }
    let grad = [(v[0] * j[1][0] - v[1] * j[0][0]) / r2, (v[0] * j[1][1] - v[1] * j[0][1]) / r2];
    Ok((v[1].atan2(v[0]), grad))
}

/// `[X]` on one chart as a [`Section`] for pullbacks.
pub fn section(field: &SectionField, chart: usize) -> Section {
    let f = field.clone();
    Section::new(move |x| {
        let (t, g) = induced_section(&f, chart, [x[0], x[1]])?;
        Ok((t, g.to_vec()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{plane_atlas, sphere_atlas, torus_atlas};

    fn custom(atlas: Atlas, x: &str, y: &str) -> SectionField {
        SectionField::new(atlas, VectorFieldSpec::Custom { x: x.into(), y: y.into() }).unwrap()
    }

    fn oracle_winding(field: &SectionField, chart: usize, c: [f64; 2], r: f64, n: usize) -> f64 {
        let mut total = 0.0;
        let mut prev = None;
        for s in 0..=n {
            let t = 2.0 * PI * s as f64 / n as f64;
            let v = field.eval(chart, [c[0] + r * t.cos(), c[1] + r * t.sin()]).unwrap();
            let a = v[1].atan2(v[0]);
            if let Some(p) = prev {
                let mut d: f64 = a - p;
                d -= 2.0 * PI * (d / (2.0 * PI)).round();
                total += d;
            }
            prev = Some(a);
        }
        total / (2.0 * PI)
    }

    #[test]
    fn planar_degrees() {
        let id = custom(plane_atlas(), "u", "v");
        let refl = custom(plane_atlas(), "u", "-v");
        let sq = custom(plane_atlas(), "u^2 - v^2", "2*u*v");
        assert_eq!(local_degree(&id, 0, [0.0, 0.0], 0.3).unwrap(), 1);
        assert_eq!(local_degree(&refl, 0, [0.0, 0.0], 0.3).unwrap(), -1);
        assert_eq!(local_degree(&sq, 0, [0.0, 0.0], 0.3).unwrap(), 2);
        assert!((oracle_winding(&sq, 0, [0.0, 0.0], 0.3, 4096) - 2.0).abs() < 1e-9);
        let scan = find_zeros(&sq, 41, &[0.1]).unwrap();
        assert_eq!(scan.zeros.len(), 1);
        assert!(norm2(scan.zeros[0].location) < 1e-5);
    }

    #[test]
    fn degree_is_stable_under_radius_refinement() {
        let f = custom(plane_atlas(), "u^3 - 3*u*v^2 + 0.1*u", "3*u^2*v - v^3 + 0.1*v");
        let a = local_degree(&f, 0, [0.0, 0.0], 0.05).unwrap();
        let b = local_degree(&f, 0, [0.0, 0.0], 0.025).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, 1);
        assert!(local_degree(&custom(plane_atlas(), "u - 0.1", "v"), 0, [0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn sphere_fields_sum_to_two() {
        for spec in [
            VectorFieldSpec::Rotational,
            VectorFieldSpec::HeightGradient,
            VectorFieldSpec::StereographicPower { k: 2 },
            VectorFieldSpec::StereographicPower { k: 0 },
        ] {
            let f = SectionField::new(sphere_atlas(), spec.clone()).unwrap();
            let scan = find_zeros(&f, 33, &[0.1]).unwrap();
            assert_eq!(poincare_hopf_sum(&scan.zeros), 2, "{spec:?}: {:?}", scan.zeros);
            assert!(check_poincare_hopf(&scan.zeros, 2).is_ok());
        }
        let f = SectionField::new(sphere_atlas(), VectorFieldSpec::StereographicPower { k: 2 }).unwrap();
        let scan = find_zeros(&f, 33, &[0.1]).unwrap();
        assert_eq!(scan.zeros.len(), 1);
        assert_eq!(scan.zeros[0].degree, 2);
        let rot = SectionField::new(sphere_atlas(), VectorFieldSpec::Rotational).unwrap();
        let scan = find_zeros(&rot, 33, &[0.1]).unwrap();
        assert_eq!(scan.zeros.len(), 2);
        assert!(scan.zeros.iter().all(|z| z.degree == 1 && norm2(z.location) < 1e-9));
    }

    #[test]
    fn torus_fields() {
        let c = SectionField::new(torus_atlas(), VectorFieldSpec::Constant { value: [1.0, 0.5] }).unwrap();
        assert!(find_zeros(&c, 25, &[0.1]).unwrap().zeros.is_empty());
        let h = SectionField::new(torus_atlas(), VectorFieldSpec::HeightGradient).unwrap();
        let scan = find_zeros(&h, 33, &[0.1]).unwrap();
        assert_eq!(scan.zeros.len(), 4);
        let mut degrees: Vec<i64> = scan.zeros.iter().map(|z| z.degree).collect();
        degrees.sort();
        assert_eq!(degrees, vec![-1, -1, 1, 1]);
        assert_eq!(check_poincare_hopf(&scan.zeros, 0).unwrap(), 0);
        assert!(check_poincare_hopf(&scan.zeros, 2).is_err());
    }

    #[test]
    fn custom_sphere_field_matches_builtin_across_charts() {
        let a = custom(sphere_atlas(), "u^2 - v^2", "2*u*v");
        let b = SectionField::new(sphere_atlas(), VectorFieldSpec::StereographicPower { k: 2 }).unwrap();
        for (chart, x) in [(0, [0.3, -0.4]), (1, [0.5, 0.2]), (1, [0.0, 0.0])] {
            let (va, ja) = match a.jet(chart, x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let (vb, jb) = b.jet(chart, x).unwrap();
            for i in 0..2 {
                assert!((va[i] - vb[i]).abs() < 1e-12);
                for k in 0..2 {
                    assert!((ja[i][k] - jb[i][k]).abs() < 1e-11);
                }
            }
        }
        assert!(SectionField::new(sphere_atlas(), VectorFieldSpec::Custom { x: "q".into(), y: "u".into() }).is_err());
        assert!(SectionField::new(sphere_atlas(), VectorFieldSpec::StereographicPower { k: 3 }).is_err());
    }

    #[test]
    fn induced_section_angles_and_transitions() {
        let c = custom(plane_atlas(), "1", "0");
        assert_eq!(induced_section(&c, 0, [0.2, 0.3]).unwrap().0, 0.0);
        let c = custom(plane_atlas(), "0", "3");
        assert!((induced_section(&c, 0, [0.2, 0.3]).unwrap().0 - PI / 2.0).abs() < 1e-15);
        assert!(induced_section(&custom(plane_atlas(), "u", "v"), 0, [0.0, 0.0]).is_err());
        let atlas = sphere_atlas();
        let f = SectionField::new(atlas.clone(), VectorFieldSpec::Rotational).unwrap();
        let x = [0.6, 0.7];
        let v0 = f.eval(0, x).unwrap();
        let j = atlas.transition_jacobian(0, 1, x).unwrap();
        let pushed = [j[0][0] * v0[0] + j[0][1] * v0[1], j[1][0] * v0[0] + j[1][1] * v0[1]];
        let x1 = atlas.transition(0, 1, x).unwrap();
        let t1 = induced_section(&f, 1, x1).unwrap().0;
        let mut d = t1 - pushed[1].atan2(pushed[0]);
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        assert!(d.abs() < 1e-8);
        let (t, g) = induced_section(&f, 0, x).unwrap();
        let h = 1e-6;
        let tp = induced_section(&f, 0, [x[0] + h, x[1]]).unwrap().0;
        let tm = induced_section(&f, 0, [x[0] - h, x[1]]).unwrap().0;
        assert!(((tp - tm) / (2.0 * h) - g[0]).abs() < 1e-7);
        assert!(t.is_finite());
    }
}
