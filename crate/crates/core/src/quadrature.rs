//! Gauss–Legendre rules, deterministic summation, and the finite-difference
//! exterior calculus on chart coordinates.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{GbcError, Result};
use crate::forms::{Mask, PointwiseForm};
use crate::manifolds::{Atlas, Region, Surface};

/// A one-dimensional quadrature rule on an interval.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss–Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

impl Rule {
    /// The rule mapped affinely onto `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> Rule {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        Rule {
            nodes: self.nodes.iter().map(|t| c + h * t).collect(),
            weights: self.weights.iter().map(|w| w * h).collect(),
        }
    }

    /// `panels` equal copies of `self` tiling `[a, b]`.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> Rule {
        let mut out = Rule { nodes: Vec::new(), weights: Vec::new() };
        let w = (b - a) / panels as f64;
        for p in 0..panels {
            let piece = self.on(a + p as f64 * w, a + (p + 1) as f64 * w);
            out.nodes.extend(piece.nodes);
            out.weights.extend(piece.weights);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Composite Gauss–Legendre rule with about `order` nodes on `[0, 2π]`,
/// built from panels of at most 16 nodes.
pub fn circle_rule(order: usize) -> Rule {
    let panels = order.div_ceil(16).max(1);
    let per = order.div_ceil(panels).max(1);
    gauss_legendre(per).composite(0.0, 2.0 * PI, panels)
}

/// Pairwise summation; the split points depend only on the length, so the
/// result is identical however the terms were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Step policy for central-difference derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub h: f64,
    /// Combine steps `h` and `h/2` as `(4D(h/2) − D(h))/3`.
    pub richardson: bool,
}

impl FdConfig {
    pub const CURVATURE: FdConfig = FdConfig { h: 1e-4, richardson: true };
    pub const VOLUME: FdConfig = FdConfig { h: 1e-3, richardson: true };

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 1e-10) {
            return Err(GbcError::Validation(format!("finite-difference step {} underflows", self.h)));
        }
        Ok(())
    }
}

type FieldFn = dyn Fn(&[f64]) -> Result<Vec<PointwiseForm>> + Send + Sync;

/// A list of differential forms given by coefficient functions of chart
/// coordinates (`dim` of them).
#[derive(Clone)]
pub struct FormField {
    dim: usize,
    len: usize,
    f: Arc<FieldFn>,
}

impl std::fmt::Debug for FormField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FormField").field("dim", &self.dim).field("len", &self.len).finish()
    }
}

impl FormField {
    pub fn new<F>(dim: usize, len: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<PointwiseForm>> + Send + Sync + 'static,
    {
        FormField { dim, len, f: Arc::new(f) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn eval(&self, c: &[f64]) -> Result<Vec<PointwiseForm>> {
        let out = (self.f)(c)?;
        debug_assert_eq!(out.len(), self.len);
        Ok(out)
    }

    /// Pointwise post-processing into `len` new forms.
    pub fn map<G>(&self, len: usize, g: G) -> FormField
    where
        G: Fn(&[f64], Vec<PointwiseForm>) -> Result<Vec<PointwiseForm>> + Send + Sync + 'static,
    {
        let inner = self.f.clone();
        FormField::new(self.dim, len, move |c| g(c, inner(c)?))
    }
}

/// `∂_a` of every coefficient of every form, indexed `[a][form]`.
pub fn partial_derivatives(field: &FormField, c: &[f64], cfg: FdConfig) -> Result<Vec<Vec<PointwiseForm>>> {
    cfg.validate()?;
    let dim = field.dim();
    let central = |a: usize, h: f64| -> Result<Vec<PointwiseForm>> {
        let mut cp = c.to_vec();
        let mut cm = c.to_vec();
        cp[a] += h;
        cm[a] -= h;
        let (fp, fm) = (field.eval(&cp)?, field.eval(&cm)?);
        Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m).scale(0.5 / h)).collect())
    };
    (0..dim)
        .map(|a| {
            let d1 = central(a, cfg.h)?;
            if !cfg.richardson {
                return Ok(d1);
            }
            let d2 = central(a, 0.5 * cfg.h)?;
            Ok(d1.iter().zip(&d2).map(|(a1, a2)| (a2.scale(4.0) - a1.clone()).scale(1.0 / 3.0)).collect())
        })
        .collect()
}

/// Exterior derivative `dω = Σ_a dx^a ∧ ∂_a ω` by central differences.
pub fn exterior_derivative(field: &FormField, cfg: FdConfig) -> FormField {
    let inner = field.clone();
    FormField::new(field.dim(), field.len(), move |c| {
        let parts = partial_derivatives(&inner, c, cfg)?;
        Ok((0..inner.len()).map(|i| differential_from_partials(&parts, i)).collect())
    })
}

/// `Σ_a dx^a ∧ ∂_a ω` for form `idx` of a `[a][form]` table of partials.
pub fn differential_from_partials(parts: &[Vec<PointwiseForm>], idx: usize) -> PointwiseForm {
    let dim = parts.len();
    let mut out = PointwiseForm::zero(dim);
    for (a, row) in parts.iter().enumerate() {
        out = &out + &PointwiseForm::monomial(dim, &[a], 1.0).wedge(&row[idx]);
    }
    out
}

/// Pulls a form on `(x, θ)` back along `θ = θ(x)`, given `∂θ/∂x`.
///
/// The last coordinate is the fiber angle; every `dθ` factor is replaced by
/// `Σ_a ∂_aθ dx^a`.
pub fn pullback_pointwise(form: &PointwiseForm, grad: &[f64]) -> PointwiseForm {
    let base_dim = form.dim() - 1;
    let theta_bit: Mask = 1 << base_dim;
    let dtheta = PointwiseForm::one_form(grad);
    let mut out = PointwiseForm::zero(base_dim);
    for (m, v) in form.iter() {
        if v == 0.0 {
            continue;
        }
        if m & theta_bit == 0 {
            out.set(m, out.get(m) + v);
        } else {
            let rest = m & !theta_bit;
            let idx: Vec<usize> = (0..base_dim).filter(|i| rest >> i & 1 == 1).collect();
            let head = PointwiseForm::monomial(base_dim, &idx, v);
            out = &out + &head.wedge(&dtheta);
        }
    }
    out
}

type SectionFn = dyn Fn(&[f64]) -> Result<(f64, Vec<f64>)> + Send + Sync;

/// A section `x ↦ (x, θ(x))` of a sphere-bundle chart with its gradient.
#[derive(Clone)]
pub struct Section {
    f: Arc<SectionFn>,
}

impl Section {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<(f64, Vec<f64>)> + Send + Sync + 'static,
    {
        Section { f: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (self.f)(x)
    }
}

/// `s*ω` for a field on the sphere-bundle chart, as a field on the base chart.
pub fn pullback_by_section(field: &FormField, section: &Section) -> FormField {
    let inner = field.clone();
    let s = section.clone();
    FormField::new(field.dim() - 1, field.len(), move |x| {
        let (theta, grad) = s.eval(x)?;
        let mut c = x.to_vec();
        c.push(theta);
        Ok(inner.eval(&c)?.iter().map(|f| pullback_pointwise(f, &grad)).collect())
    })
}

/// How node loops are executed. `Parallel` falls back to sequential
/// execution when the crate is built without the `parallel` feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Parallel,
    Sequential,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Order-preserving map with early error return.
pub fn map_items<T, U, F>(exec: Execution, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(&f).collect()
        }
        _ => items.iter().map(&f).collect(),
    }
}

/// A coordinate disk removed around a zero of the section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcisedDisk {
    pub chart: usize,
    pub center: [f64; 2],
    pub radius: f64,
}

/// Outer edge of a polar cell, seen from the cell's center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterEdge {
    /// Circle `|x| = radius` about the chart origin.
    Circle { radius: f64 },
    /// Line `⟨x − center, (cos ψ, sin ψ)⟩ = distance`.
    Line { normal: f64, distance: f64 },
}

impl OuterEdge {
    /// Distance from `center` to the edge along direction `φ`.
    fn reach(&self, center: [f64; 2], phi: f64) -> f64 {
        let (c, s) = (phi.cos(), phi.sin());
        match *self {
            OuterEdge::Circle { radius } => {
                let b = center[0] * c + center[1] * s;
                let q = center[0] * center[0] + center[1] * center[1] - radius * radius;
                -b + (b * b - q).max(0.0).sqrt()
            }
            OuterEdge::Line { normal, distance } => distance / (phi - normal).cos(),
        }
    }
}

/// One integration cell of an excised domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Rect { chart: usize, lo: [f64; 2], hi: [f64; 2] },
    /// `{center + ρ(cos φ, sin φ) : φ ∈ phi, inner ≤ ρ ≤ reach(φ)}`.
    Polar { chart: usize, center: [f64; 2], phi: [f64; 2], inner: f64, outer: OuterEdge },
}

/// A quadrature node on a base chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub chart: usize,
    pub x: [f64; 2],
    pub weight: f64,
}

/// The base surface with coordinate disks removed, cut into cells that each
/// contain at most one excised disk.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcisedDomain {
    pub atlas: Atlas,
    pub disks: Vec<ExcisedDisk>,
    pub cells: Vec<Cell>,
}

/// Margin kept between an excised disk and any cell edge, as a fraction of
/// the distance from the center to that edge.
const EDGE_MARGIN: f64 = 0.9;

/// Midpoint of the widest gap between sorted periodic coordinates.
fn mid_gap(coords: &[f64], period: f64) -> f64 {
    if coords.is_empty() {
        return 0.0;
    }
    let mut c: Vec<f64> = coords.iter().map(|v| v.rem_euclid(period)).collect();
    c.sort_by(f64::total_cmp);
    let mut best = (c[0] + period - c[c.len() - 1], c[c.len() - 1]);
    for w in c.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    best.1 + 0.5 * best.0
}

fn split_rect(chart: usize, lo: [f64; 2], hi: [f64; 2], disks: &[ExcisedDisk], out: &mut Vec<Cell>) -> Result<()> {
    match disks {
        [] => {
            out.push(Cell::Rect { chart, lo, hi });
            Ok(())
        }
        [d] => sectors(chart, lo, hi, d, out),
        _ => {
            let mut best = (0.0, 0, 0.0);
            for axis in 0..2 {
                let mut c: Vec<f64> = disks.iter().map(|d| d.center[axis]).collect();
                c.sort_by(f64::total_cmp);
                for w in c.windows(2) {
                    if w[1] - w[0] > best.0 {
                        best = (w[1] - w[0], axis, 0.5 * (w[0] + w[1]));
                    }
                }
            }
            let (gap, axis, cut) = best;
            if gap == 0.0 {
                return Err(GbcError::Excision("coincident zeros".into()));
            }
            let (mut hi_a, mut lo_b) = (hi, lo);
            hi_a[axis] = cut;
            lo_b[axis] = cut;
            let (a, b): (Vec<ExcisedDisk>, Vec<ExcisedDisk>) = disks.iter().partition(|d| d.center[axis] < cut);
            split_rect(chart, lo, hi_a, &a, out)?;
            split_rect(chart, lo_b, hi, &b, out)
        }
    }
}

/// The largest square about the disk's center that fits in `[lo, hi]`, cut
/// into four polar sectors, plus the strips of the rectangle around it.
fn sectors(chart: usize, lo: [f64; 2], hi: [f64; 2], d: &ExcisedDisk, out: &mut Vec<Cell>) -> Result<()> {
    let c = d.center;
    let h = [hi[0] - c[0], hi[1] - c[1], c[0] - lo[0], c[1] - lo[1]].into_iter().fold(f64::INFINITY, f64::min);
    if d.radius >= EDGE_MARGIN * h {
        return Err(GbcError::Excision(format!(
            "disk of radius {} about ({}, {}) reaches a cell edge",
            d.radius, c[0], c[1]
        )));
    }
    for side in 0..4 {
        let normal = side as f64 * 0.5 * PI;
        let phi = [normal - 0.25 * PI, normal + 0.25 * PI];
        out.push(Cell::Polar { chart, center: c, phi, inner: d.radius, outer: OuterEdge::Line { normal, distance: h } });
    }
    let (bl, bh) = ([c[0] - h, c[1] - h], [c[0] + h, c[1] + h]);
    let strips = [
        ([lo[0], lo[1]], [bl[0], hi[1]]),
        ([bh[0], lo[1]], [hi[0], hi[1]]),
        ([bl[0], lo[1]], [bh[0], bl[1]]),
        ([bl[0], bh[1]], [bh[0], hi[1]]),
    ];
    let tiny = 1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    for (l, u) in strips {
        if u[0] - l[0] > tiny && u[1] - l[1] > tiny {
            out.push(Cell::Rect { chart, lo: l, hi: u });
        }
    }
    Ok(())
}

impl ExcisedDomain {
    /// Cuts every chart region around the given disks. Disk regions take at
    /// most one zero; rectangles are split between zeros first, and on the
    /// torus the period cell is shifted so that no zero lies near its edge.
    pub fn new(atlas: &Atlas, disks: &[ExcisedDisk]) -> Result<Self> {
        let mut cells = Vec::new();
        let mut kept = Vec::new();
        for (chart, region) in atlas.regions.iter().enumerate() {
            let mine: Vec<ExcisedDisk> = disks.iter().filter(|d| d.chart == chart).copied().collect();
            if mine.iter().any(|d| !(d.radius > 0.0 && d.radius.is_finite())) {
                return Err(GbcError::Excision("excision radius must be positive".into()));
            }
            match *region {
                Region::Disk { radius } => {
                    let outer = OuterEdge::Circle { radius };
                    match mine.as_slice() {
                        [] => cells.push(Cell::Polar { chart, center: [0.0; 2], phi: [0.0, 2.0 * PI], inner: 0.0, outer }),
                        [d] => {
                            let r = (d.center[0] * d.center[0] + d.center[1] * d.center[1]).sqrt();
                            if d.radius >= EDGE_MARGIN * (radius - r) {
                                return Err(GbcError::Excision(format!(
                                    "disk of radius {} about ({}, {}) reaches the chart edge",
                                    d.radius, d.center[0], d.center[1]
                                )));
                            }
                            cells.push(Cell::Polar { chart, center: d.center, phi: [0.0, 2.0 * PI], inner: d.radius, outer });
                        }
                        _ => {
                            return Err(GbcError::Excision(format!(
                                "{} zeros in chart {chart}; a disk chart takes at most one",
                                mine.len()
                            )))
                        }
                    }
                    kept.extend(mine);
                }
                Region::Rect { x0, y0, w, h } => {
                    let (mut lo, mut hi) = ([x0, y0], [x0 + w, y0 + h]);
                    let mut placed = mine.clone();
                    if atlas.surface == Surface::Torus {
                        for axis in 0..2 {
                            let coords: Vec<f64> = mine.iter().map(|d| d.center[axis]).collect();
                            let period = hi[axis] - lo[axis];
                            lo[axis] = mid_gap(&coords, period);
                            hi[axis] = lo[axis] + period;
                            for d in placed.iter_mut() {
                                d.center[axis] = lo[axis] + (d.center[axis] - lo[axis]).rem_euclid(period);
                            }
                        }
                    }
                    split_rect(chart, lo, hi, &placed, &mut cells)?;
                    kept.extend(mine);
                }
            }
        }
        Ok(ExcisedDomain { atlas: atlas.clone(), disks: kept, cells })
    }

    /// Tensor-product Gauss–Legendre nodes: `order × order` per rectangle,
    /// `order` radial nodes per ray, `order` angular nodes per full polar
    /// cell and `order/2` per sector, spaced evenly along the sector's edge.
    pub fn nodes(&self, order: usize) -> Vec<Node> {
        let line = gauss_legendre(order);
        let half = gauss_legendre(order.div_ceil(2).max(1));
        let mut out = Vec::new();
        for cell in &self.cells {
            match *cell {
                Cell::Rect { chart, lo, hi } => {
                    let (rx, ry) = (line.on(lo[0], hi[0]), line.on(lo[1], hi[1]));
                    for (x, wx) in rx.nodes.iter().zip(&rx.weights) {
                        for (y, wy) in ry.nodes.iter().zip(&ry.weights) {
                            out.push(Node { chart, x: self.atlas.wrap([*x, *y]), weight: wx * wy });
                        }
                    }
                }
                Cell::Polar { chart, center, phi, inner, outer } => {
                    let rp = match outer {
                        OuterEdge::Circle { .. } => circle_rule(order),
                        // nodes uniform along the edge: φ = ψ + atan(s)
                        OuterEdge::Line { normal, .. } => {
                            let rel = |a: f64| (a - normal + PI).rem_euclid(2.0 * PI) - PI;
                            let es = half.on(rel(phi[0]).tan(), rel(phi[1]).tan());
                            Rule {
                                nodes: es.nodes.iter().map(|t| normal + t.atan()).collect(),
                                weights: es.nodes.iter().zip(&es.weights).map(|(t, w)| w / (1.0 + t * t)).collect(),
                            }
                        }
                    };
                    for (p, wp) in rp.nodes.iter().zip(&rp.weights) {
                        let (c, s) = (p.cos(), p.sin());
                        let rr = line.on(inner, outer.reach(center, *p));
                        for (r, wr) in rr.nodes.iter().zip(&rr.weights) {
                            let x = [center[0] + r * c, center[1] + r * s];
                            out.push(Node { chart, x: self.atlas.wrap(x), weight: wp * wr * r });
                        }
                    }
                }
            }
        }
        out
    }
}

/// `∫ f` over the excised domain, where `fields[chart]` carries the base
/// 2-form as its first entry.
pub fn base_integral_excised(fields: &[FormField], dom: &ExcisedDomain, order: usize) -> Result<f64> {
    base_integral_excised_with(fields, dom, order, Execution::default())
}

pub fn base_integral_excised_with(fields: &[FormField], dom: &ExcisedDomain, order: usize, exec: Execution) -> Result<f64> {
    if fields.len() != dom.atlas.chart_count() || fields.iter().any(|f| f.dim() != 2) {
        return Err(GbcError::Structural("need one base-chart field per chart".into()));
    }
    let nodes = dom.nodes(order);
    let vals = map_items(exec, &nodes, |n| Ok(n.weight * fields[n.chart].eval(&n.x)?[0].get(0b11)))?;
    Ok(pairwise_sum(&vals))
}

/// `∮ f` over the counterclockwise circle of given radius, where `f` is the
/// first entry of a base-chart field of 1-forms.
pub fn boundary_circle_integral(f: &FormField, center: [f64; 2], radius: f64, order: usize) -> Result<f64> {
    if f.dim() != 2 {
        return Err(GbcError::Structural("boundary integrals need a base-chart field".into()));
    }
    let rule = circle_rule(order);
    let vals = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| {
            let (c, s) = (t.cos(), t.sin());
            let form = &f.eval(&[center[0] + radius * c, center[1] + radius * s])?[0];
            Ok(w * radius * (-s * form.get(0b01) + c * form.get(0b10)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&vals))
}

/// `∫_{S_x} f` for the first entry of a sphere-bundle field of 1-forms,
/// integrating its `dθ` coefficient over the fiber circle.
pub fn fiber_integral(f: &FormField, x: [f64; 2], order: usize) -> Result<f64> {
    if f.dim() != 3 {
        return Err(GbcError::Structural("fiber integrals need a sphere-bundle field".into()));
    }
    let rule = circle_rule(order);
    let vals = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| Ok(w * f.eval(&[x[0], x[1], *t])?[0].get(0b100)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&vals))
}

/// Value at `at` of the polynomial through `(xs, ys)`, by Neville's scheme.
pub fn neville(xs: &[f64], ys: &[f64], at: f64) -> Result<f64> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(GbcError::Validation("extrapolation needs matching, non-empty samples".into()));
    }
    let mut p = ys.to_vec();
    for k in 1..xs.len() {
        for i in 0..xs.len() - k {
            let (a, b) = (xs[i], xs[i + k]);
            if a == b {
                return Err(GbcError::Validation("repeated extrapolation abscissa".into()));
            }
            p[i] = ((at - b) * p[i] + (a - at) * p[i + 1]) / (a - b);
        }
    }
    Ok(p[0])
}

/// Limit `ε → 0` of a series sampled on a decreasing schedule: Neville
/// extrapolation when `richardson` is set, the last sample otherwise.
pub fn extrapolate_to_zero(eps: &[f64], values: &[f64], richardson: bool) -> Result<f64> {
    if richardson {
        neville(eps, values, 0.0)
    } else {
        values.last().copied().ok_or_else(|| GbcError::Validation("empty epsilon schedule".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_known_nodes() {
        let r = gauss_legendre(2);
        assert!((r.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = gauss_legendre(3);
        assert!((r.nodes[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        for n in [1, 4, 7, 16, 48] {
            let r = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn circle_rule_integrates_trig() {
        let r = circle_rule(64);
        assert_eq!(r.len(), 64);
        let q: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * (3.0 * t).cos().powi(2)).sum();
        assert!((q - PI).abs() < 1e-13);
    }

    fn poly_field() -> FormField {
        // ω = x¹ dx²  and  f = sin(x¹)cos(θ)  on coordinates (x¹, x², θ) = (0, 1, 2)
        FormField::new(3, 2, |c| {
            Ok(vec![
                PointwiseForm::monomial(3, &[1], c[0]),
                PointwiseForm::scalar(3, c[0].sin() * c[2].cos()),
            ])
        })
    }

    #[test]
    fn exterior_derivative_of_simple_forms() {
        let d = exterior_derivative(&poly_field(), FdConfig::CURVATURE);
        let v = d.eval(&[0.3, -0.2, 1.1]).unwrap();
        assert!((v[0].coeff(&[0, 1]) - 1.0).abs() < 1e-10);
        assert!((v[0].max_abs() - 1.0).abs() < 1e-10);
        assert!((v[1].coeff(&[0]) - 0.3f64.cos() * 1.1f64.cos()).abs() < 1e-10);
        assert!((v[1].coeff(&[2]) + 0.3f64.sin() * 1.1f64.sin()).abs() < 1e-10);
        let dd = exterior_derivative(&d, FdConfig::CURVATURE);
        assert!(dd.eval(&[0.3, -0.2, 1.1]).unwrap()[1].max_abs() < 1e-7);
    }

    #[test]
    fn pullback_rules() {
        let dtheta = PointwiseForm::monomial(3, &[2], 1.0);
        assert!(pullback_pointwise(&dtheta, &[0.0, 0.0]).is_zero());
        let area = PointwiseForm::monomial(3, &[0, 1], 1.0);
        assert_eq!(pullback_pointwise(&area, &[0.7, -0.2]), PointwiseForm::monomial(2, &[0, 1], 1.0));
        // ω₀₁ + ω₀θ ∂₁θ − ω₁θ ∂₀θ
        let mut w = PointwiseForm::zero(3);
        w.set(0b011, 2.0);
        w.set(0b101, 3.0);
        w.set(0b110, 5.0);
        let p = pullback_pointwise(&w, &[0.5, 0.25]);
        assert!((p.coeff(&[0, 1]) - (2.0 + 3.0 * 0.25 - 5.0 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }

    use crate::manifolds::{sphere_atlas, torus_atlas};
    use proptest::prelude::*;

    fn base_field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> FormField {
        FormField::new(2, 1, move |x| Ok(vec![PointwiseForm::monomial(2, &[0, 1], f(x[0], x[1]))]))
    }

    fn one_form_field(f: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static) -> FormField {
        FormField::new(2, 1, move |x| Ok(vec![PointwiseForm::one_form(&f(x[0], x[1]))]))
    }

    fn round_area() -> FormField {
        base_field(|u, v| (2.0 / (1.0 + u * u + v * v)).powi(2))
    }

    #[test]
    fn round_sphere_area() {
        let atlas = sphere_atlas();
        let dom = ExcisedDomain::new(&atlas, &[]).unwrap();
        let a = base_integral_excised(&[round_area(), round_area()], &dom, 48).unwrap();
        assert!((a - 4.0 * PI).abs() < 1e-6, "{a}");
        let eps = 0.1;
        let disks = [ExcisedDisk { chart: 0, center: [0.0, 0.0], radius: eps }];
        let dom = ExcisedDomain::new(&atlas, &disks).unwrap();
        let a = base_integral_excised(&[round_area(), round_area()], &dom, 48).unwrap();
        let cap = 4.0 * PI * eps * eps / (1.0 + eps * eps);
        assert!((a - (4.0 * PI - cap)).abs() < 1e-10, "{a}");
    }

    #[test]
    fn torus_area_with_boundary_zeros() {
        let atlas = torus_atlas();
        let eps = 0.2;
        let disks: Vec<ExcisedDisk> = [[0.0, 0.0], [PI, 0.0], [0.0, PI], [PI, PI]]
            .iter()
            .map(|&c| ExcisedDisk { chart: 0, center: c, radius: eps })
            .collect();
        let dom = ExcisedDomain::new(&atlas, &disks).unwrap();
        assert_eq!(dom.cells.len(), 16);
        assert!(dom.cells.iter().all(|c| matches!(c, Cell::Polar { .. })));
        let a = base_integral_excised(&[base_field(|_, _| 1.0)], &dom, 32).unwrap();
        assert!((a - (4.0 * PI * PI - 4.0 * PI * eps * eps)).abs() < 1e-11, "{a}");
    }

    #[test]
    fn excision_geometry_errors() {
        let two = [
            ExcisedDisk { chart: 0, center: [0.1, 0.0], radius: 0.01 },
            ExcisedDisk { chart: 0, center: [-0.1, 0.0], radius: 0.01 },
        ];
        assert!(matches!(ExcisedDomain::new(&sphere_atlas(), &two), Err(GbcError::Excision(_))));
        let edge = [ExcisedDisk { chart: 1, center: [0.95, 0.0], radius: 0.1 }];
        assert!(matches!(ExcisedDomain::new(&sphere_atlas(), &edge), Err(GbcError::Excision(_))));
        let close = [
            ExcisedDisk { chart: 0, center: [1.0, 1.0], radius: 0.2 },
            ExcisedDisk { chart: 0, center: [1.3, 1.0], radius: 0.2 },
        ];
        assert!(matches!(ExcisedDomain::new(&torus_atlas(), &close), Err(GbcError::Excision(_))));
    }

    // ω = sin(x + 2y) dx + (x²y + cos y) dy,  dω = (2xy − 2cos(x + 2y)) dx∧dy
    fn omega() -> FormField {
        one_form_field(|x, y| [(x + 2.0 * y).sin(), x * x * y + y.cos()])
    }

    fn d_omega() -> FormField {
        base_field(|x, y| 2.0 * x * y - 2.0 * (x + 2.0 * y).cos())
    }

    #[test]
    fn stokes_on_excised_chart() {
        let atlas = sphere_atlas();
        let disk = ExcisedDisk { chart: 0, center: [0.2, -0.1], radius: 0.1 };
        let dom = ExcisedDomain::new(&atlas, &[disk]).unwrap();
        let inside = base_integral_excised(&[d_omega(), base_field(|_, _| 0.0)], &dom, 48).unwrap();
        let hole = boundary_circle_integral(&omega(), disk.center, disk.radius, 48).unwrap();
        let seam = boundary_circle_integral(&omega(), [0.0, 0.0], 1.0, 48).unwrap();
        assert!((inside + hole - seam).abs() < 1e-10, "{}", inside + hole - seam);
    }

    #[test]
    fn winding_and_exact_forms_on_circles() {
        let wind = one_form_field(|x, y| {
            let r2 = x * x + y * y;
            [-y / (2.0 * PI * r2), x / (2.0 * PI * r2)]
        });
        for r in [0.05, 0.5, 2.0] {
            assert!((boundary_circle_integral(&wind, [0.0, 0.0], r, 48).unwrap() - 1.0).abs() < 1e-13);
        }
        assert!(boundary_circle_integral(&wind, [3.0, 0.0], 0.5, 48).unwrap().abs() < 1e-12);
        // d(e^x sin y)
        let exact = one_form_field(|x, y| [x.exp() * y.sin(), x.exp() * y.cos()]);
        assert!(boundary_circle_integral(&exact, [0.3, -0.7], 0.4, 48).unwrap().abs() < 1e-8);
    }

    #[test]
    fn fiber_integral_of_fiber_forms() {
        let f = FormField::new(3, 1, |c| Ok(vec![PointwiseForm::one_form(&[5.0, 7.0, 1.0 + c[2].sin() + c[0]])]));
        let v = fiber_integral(&f, [0.5, 0.0], 64).unwrap();
        assert!((v - 2.0 * PI * 1.5).abs() < 1e-13);
    }

    #[test]
    fn neville_reproduces_polynomials() {
        let xs = [0.2, 0.1, 0.05];
        let ys: Vec<f64> = xs.iter().map(|e| 3.0 - 2.0 * e + 7.0 * e * e).collect();
        assert!((neville(&xs, &ys, 0.0).unwrap() - 3.0).abs() < 1e-13);
        assert_eq!(extrapolate_to_zero(&xs, &ys, false).unwrap(), ys[2]);
        assert!(neville(&[1.0, 1.0], &[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let atlas = torus_atlas();
        let disks = [ExcisedDisk { chart: 0, center: [1.0, 2.0], radius: 0.1 }];
        let dom = ExcisedDomain::new(&atlas, &disks).unwrap();
        let f = [base_field(|x, y| (x * y).sin() + 0.1 * x)];
        let a = base_integral_excised_with(&f, &dom, 24, Execution::Parallel).unwrap();
        let b = base_integral_excised_with(&f, &dom, 24, Execution::Sequential).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn stokes_on_excised_torus(
            a in -1.0f64..1.0, b in -1.0f64..1.0, k in 1i32..3,
            cx in 0.0f64..6.28, cy in 0.0f64..6.28, r in 0.05f64..0.3,
        ) {
            // periodic ω = a sin(k y) cos x dx + b cos(k x + y) dy
            let kf = k as f64;
            let w = one_form_field(move |x, y| [a * (kf * y).sin() * x.cos(), b * (kf * x + y).cos()]);
            let dw = base_field(move |x, y| -b * kf * (kf * x + y).sin() - a * kf * (kf * y).cos() * x.cos());
            let disk = ExcisedDisk { chart: 0, center: [cx, cy], radius: r };
            let dom = ExcisedDomain::new(&torus_atlas(), &[disk]).unwrap();
            let inside = base_integral_excised(&[dw], &dom, 32).unwrap();
            let hole = boundary_circle_integral(&w, [cx, cy], r, 48).unwrap();
            prop_assert!((inside + hole).abs() < 1e-9, "{}", inside + hole);
        }

        #[test]
        fn torus_cells_tile_the_excised_area(
            pts in proptest::collection::vec((0.0f64..6.28, 0.0f64..6.28), 1..5),
        ) {
            let mut disks: Vec<ExcisedDisk> = Vec::new();
            for (x, y) in pts {
                let far = disks.iter().all(|d| {
                    let dx = ((d.center[0] - x + PI).rem_euclid(2.0 * PI) - PI).abs();
                    let dy = ((d.center[1] - y + PI).rem_euclid(2.0 * PI) - PI).abs();
                    dx.max(dy) > 0.5
                });
                if far {
                    disks.push(ExcisedDisk { chart: 0, center: [x, y], radius: 0.02 });
                }
            }
            if let Ok(dom) = ExcisedDomain::new(&torus_atlas(), &disks) {
                let a = base_integral_excised(&[base_field(|_, _| 1.0)], &dom, 32).unwrap();
                let expect = 4.0 * PI * PI - disks.len() as f64 * PI * 0.0004;
                prop_assert!((a - expect).abs() < 1e-10, "{a} vs {expect}");
            }
        }
    }
}
