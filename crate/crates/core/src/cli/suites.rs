//! Property suites: bigraded algebra, pointwise transgression identities,
//! Minkowski norms, Cartan tensors and degrees of built-in vector fields.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::SkewMatrixValuedForm;
use crate::chern_forms::{
    ell_xi_residual, gamma_half, gaussian_moment, omega_pfaffian, phi_k, phi_k_enumeration, IdentityResiduals,
    TransgressionBundle,
};
use crate::cli::report::Check;
use crate::error::Result;
use crate::forms::PointwiseForm;
use crate::manifolds::{atlas_for, plane_atlas, SbPoint, Surface};
use crate::metric::finsler::{FinslerMetric, MetricSpec};
use crate::metric::norm::{
    cartan_tensor_of, fundamental_tensor_of, homogeneity_defect, sum_decomposition, sum_norms, MinkowskiNorm,
};
use crate::quadrature::{differential_from_partials, map_items, partial_derivatives, Execution, FdConfig};
use crate::topology::{check_poincare_hopf, find_zeros, local_degree, SectionField, VectorFieldSpec};

pub fn random_form(rng: &mut ChaCha8Rng, dim: usize, degree: usize) -> PointwiseForm {
    let mut f = PointwiseForm::zero(dim);
    for m in PointwiseForm::<f64>::basis(dim, degree) {
        f.set(m, rng.gen_range(-1.0..1.0));
    }
    f
}

/// A skew matrix of random `degree`-forms on `dim` coordinates.
pub fn random_skew(rng: &mut ChaCha8Rng, n: usize, dim: usize, degree: usize) -> Result<SkewMatrixValuedForm> {
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            upper.push((i, j, random_form(rng, dim, degree)));
        }
    }
    SkewMatrixValuedForm::from_upper(n, dim, &upper)
}

/// Expansion of `ℓ·Ξ` against its closed form for ranks 2–4, the vanishing
/// Pfaffian in odd rank, the Gaussian-moment coefficient identity, and the
/// `Φ_k` algebra against index enumeration.
pub fn algebra_checks(seed: u64, tol: f64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for n in 2..=4 {
        let mut worst = 0.0f64;
        let mut phi_worst = 0.0f64;
        for _ in 0..4 {
            let omega = random_skew(&mut rng, n, 5, 2)?;
            let varpi = random_skew(&mut rng, n, 5, 1)?;
            let t = rng.gen_range(0.2..2.0);
            worst = worst.max(ell_xi_residual(n, &omega, &varpi, t)?);
            for k in 0..=(n - 1) / 2 {
                let a = phi_k(n, &omega, &varpi, k)?;
                let b = phi_k_enumeration(n, &omega, &varpi, k)?;
                phi_worst = phi_worst.max((&a - &b).max_abs());
            }
        }
        checks.push(Check::residual(format!("ell_xi_expansion_n{n}"), worst, tol));
        checks.push(Check::residual(format!("phi_algebra_n{n}"), phi_worst, tol));
    }
    let mut odd = 0.0f64;
    for _ in 0..4 {
        odd = odd.max(omega_pfaffian(&random_skew(&mut rng, 3, 6, 2)?).max_abs());
    }
    checks.push(Check::residual("pfaffian_rank3_vanishes", odd, 0.0));
    let mut moment = 0.0f64;
    for (n, k) in [(2, 0), (3, 0), (3, 1), (4, 0), (4, 1)] {
        moment = moment.max((gaussian_moment(n - 1 - 2 * k) - gamma_half(n - 2 * k) / 2.0).abs());
    }
    checks.push(Check::residual("gaussian_moment_identity", moment, 1e-12));
    Ok(checks)
}

/// Random sphere-bundle points of the bundle's atlas.
pub fn sample_points(bundle: &TransgressionBundle, count: usize, seed: u64) -> Vec<SbPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (chart, x) = bundle.model.atlas.sample_point(&mut rng);
            SbPoint::new(chart, x, rng.gen_range(0.0..2.0 * PI))
        })
        .collect()
}

/// Worst pointwise transgression residuals over the given points.
pub fn identity_residuals(bundle: &TransgressionBundle, points: &[SbPoint]) -> Result<IdentityResiduals> {
    let all = map_items(Execution::default(), points, |p| bundle.identity_residuals(*p))?;
    Ok(all.iter().fold(IdentityResiduals::default(), |acc, r| acc.max(r)))
}

pub fn identity_checks(r: &IdentityResiduals, identity_tol: f64, exact_tol: f64) -> Vec<Check> {
    vec![
        Check::residual("transgression_d_pi", r.d_pi, identity_tol),
        Check::residual("integrand_exactness", r.exactness, identity_tol),
        Check::residual("chern_weil_upsilon0", r.chern_weil, identity_tol),
        Check::residual("fiber_volume_form", r.fiber_volume, exact_tol),
        Check::residual("modified_metric_compatibility", r.compatibility, exact_tol),
    ]
}

/// `(max |dU_t|, max |∂_t U_t − d Im(potential)|)` at the given points with
/// `t ∈ [0.5, 1.5]`.
pub fn mathai_quillen_residuals(bundle: &TransgressionBundle, points: &[SbPoint], seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(SbPoint, f64)> = points.iter().map(|p| (*p, rng.gen_range(0.5..1.5))).collect();
    let cfg = FdConfig { h: 1e-3, richardson: true };
    let h = 1e-3;
    let res = map_items(Execution::default(), &jobs, |(p, t)| {
        let c = p.coords();
        let f = bundle.mathai_quillen_field(p.chart, *t);
        let parts = partial_derivatives(&f, &c, cfg)?;
        let closed = differential_from_partials(&parts, 0).max_abs();
        let up = bundle.mathai_quillen_field(p.chart, t + h).eval(&c)?;
        let um = bundle.mathai_quillen_field(p.chart, t - h).eval(&c)?;
        let dudt = (&up[0] - &um[0]).scale(0.5 / h);
        // −𝕚 d(a + 𝕚b) = d b − 𝕚 d a, and d a vanishes
        let flow = (&dudt - &differential_from_partials(&parts, 2)).max_abs();
        Ok((closed, flow))
    })?;
    Ok(res.iter().fold((0.0f64, 0.0f64), |acc, r| (acc.0.max(r.0), acc.1.max(r.1))))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * 0.2
}

/// A random Riemannian, Randers or quartic norm on `R^n`.
pub fn random_norm(rng: &mut ChaCha8Rng, n: usize) -> Result<MinkowskiNorm> {
    match rng.gen_range(0..3) {
        0 => MinkowskiNorm::riemannian(random_spd(rng, n)),
        1 => {
            let a = random_spd(rng, n);
            let dir = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            // scale b to ‖b‖_{A⁻¹} = s < 1
            let inv = a.clone().cholesky().expect("spd").inverse();
            let len = (dir.transpose() * &inv * &dir)[(0, 0)].sqrt().max(1e-12);
            let s = rng.gen_range(0.0..0.9);
            MinkowskiNorm::randers(a, dir * (s / len))
        }
        _ => MinkowskiNorm::quartic(n, rng.gen_range(0.0..1.0)),
    }
}

/// Counts for the sum-of-norms property suite.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SumNormStats {
    pub pairs: usize,
    pub rays: usize,
    pub homogeneity_failures: usize,
    pub definiteness_failures: usize,
    pub decomposition_failures: usize,
    pub worst_homogeneity: f64,
    pub min_eigenvalue: f64,
}

/// `F₁ + F₂` for random pairs: homogeneity, positive definiteness of the
/// fundamental tensor, and non-negativity of both terms of its splitting.
pub fn sum_norm_suite(pairs: usize, rays: usize, seed: u64) -> Result<SumNormStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = SumNormStats { pairs, rays, min_eigenvalue: f64::INFINITY, ..Default::default() };
    for _ in 0..pairs {
        let n = rng.gen_range(2..=3);
        let (f1, f2) = (random_norm(&mut rng, n)?, random_norm(&mut rng, n)?);
        let sum = sum_norms(&f1, &f2)?;
        for _ in 0..rays {
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if y.iter().all(|v| v.abs() < 1e-3) {
                continue;
            }
            let lambda = rng.gen_range(0.1..10.0);
            let h = homogeneity_defect(&sum, &y, lambda);
            stats.worst_homogeneity = stats.worst_homogeneity.max(h);
            if h > 1e-12 {
                stats.homogeneity_failures += 1;
            }
            match fundamental_tensor_of(&sum, &y) {
                Ok(ft) => {
                    let ev = ft.min_eigenvalue();
                    stats.min_eigenvalue = stats.min_eigenvalue.min(ev);
                    if ev <= 0.0 {
                        stats.definiteness_failures += 1;
                    }
                }
                Err(_) => stats.definiteness_failures += 1,
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, b) = sum_decomposition(&f1, &f2, &y, &x)?;
            if a < 0.0 || b < -1e-12 * (1.0 + a.abs()) {
                stats.decomposition_failures += 1;
            }
        }
    }
    Ok(stats)
}

pub fn sum_norm_checks(s: &SumNormStats) -> Vec<Check> {
    vec![
        Check::within("sum_norm_homogeneity_failures", s.homogeneity_failures as f64, 0.0, 0.0),
        Check::within("sum_norm_definiteness_failures", s.definiteness_failures as f64, 0.0, 0.0),
        Check::within("sum_norm_decomposition_failures", s.decomposition_failures as f64, 0.0, 0.0),
    ]
}

/// `max |y^k A_{kij}|` over the metric zoo and random single-fiber norms, and
/// `max |A|` over the Riemannian members.
pub fn cartan_suite(samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut contraction, mut riemannian) = (0.0f64, 0.0f64);
    for spec in MetricSpec::zoo() {
        for surface in [Surface::Sphere, Surface::Torus, Surface::Plane] {
            let Ok(metric) = FinslerMetric::new(surface, spec.clone()) else { continue };
            let atlas = atlas_for(surface);
            for _ in 0..samples {
                let (chart, x) = atlas.sample_point(&mut rng);
                let t = rng.gen_range(0.0..2.0 * PI);
                let y = [t.cos(), t.sin()];
                let a = metric.cartan_tensor(chart, x, y)?;
                contraction = contraction.max(a.contraction_residual(&y));
                if spec.is_riemannian() {
                    riemannian = riemannian.max(a.max_abs());
                }
            }
        }
    }
    for _ in 0..samples {
        let n = rng.gen_range(2..=4);
        let norm = random_norm(&mut rng, n)?;
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = cartan_tensor_of(&norm, &y)?;
        contraction = contraction.max(a.contraction_residual(&y));
        if let MinkowskiNorm::Riemannian(_) = norm {
            riemannian = riemannian.max(a.max_abs());
        }
    }
    Ok((contraction, riemannian))
}

pub fn cartan_checks(contraction: f64, riemannian: f64) -> Vec<Check> {
    vec![
        Check::residual("cartan_y_contraction", contraction, 1e-10),
        Check::residual("cartan_riemannian_vanishes", riemannian, 1e-12),
    ]
}

/// Built-in (surface, metric-free) vector-field scenarios.
pub fn builtin_fields() -> Vec<(Surface, VectorFieldSpec)> {
    vec![
        (Surface::Sphere, VectorFieldSpec::Rotational),
        (Surface::Sphere, VectorFieldSpec::HeightGradient),
        (Surface::Sphere, VectorFieldSpec::StereographicPower { k: 0 }),
        (Surface::Sphere, VectorFieldSpec::StereographicPower { k: 1 }),
        (Surface::Sphere, VectorFieldSpec::StereographicPower { k: 2 }),
        (Surface::Torus, VectorFieldSpec::Constant { value: [1.0, 0.5] }),
        (Surface::Torus, VectorFieldSpec::HeightGradient),
    ]
}

/// Winding degrees of the model zeros `(u, v)`, `(u, −v)`, `(u² − v², 2uv)`
/// at two radii each, and Poincaré–Hopf sums of the built-in fields.
pub fn topology_checks(grid: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, x, y, expect) in [
        ("degree_identity", "u", "v", 1),
        ("degree_reflection", "u", "-v", -1),
        ("degree_square", "u^2 - v^2", "2*u*v", 2),
    ] {
        let f = SectionField::new(plane_atlas(), VectorFieldSpec::Custom { x: x.into(), y: y.into() })?;
        for r in [0.5, 0.25] {
            let d = local_degree(&f, 0, [0.0, 0.0], r)?;
            checks.push(Check::within(format!("{name}_r{r}"), d as f64, expect as f64, 0.0));
        }
    }
    for (surface, spec) in builtin_fields() {
        let atlas = atlas_for(surface);
        let chi = atlas.euler_characteristic;
        let f = SectionField::new(atlas, spec.clone())?;
        let scan = find_zeros(&f, grid, &[])?;
        let sum = check_poincare_hopf(&scan.zeros, chi).unwrap_or_else(|_| scan.zeros.iter().map(|z| z.degree).sum());
        let name = format!("poincare_hopf_{surface:?}_{}", spec.id()).to_lowercase();
        checks.push(Check::within(name, sum as f64, chi as f64, 0.0));
    }
    Ok(checks)
}
