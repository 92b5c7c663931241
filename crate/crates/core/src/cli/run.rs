//! Scenario pipelines behind the command-line subcommands.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chern_forms::TransgressionBundle;
use crate::cli::config::ExperimentConfig;
use crate::cli::report::{Check, Report, SeriesRow};
use crate::cli::suites;
use crate::connection::{ConnectionKind, ConnectionModel};
use crate::error::{GbcError, Result};
use crate::manifolds::{atlas_for, install_metric, Surface};
use crate::metric::finsler::MetricSpec;
use crate::quadrature::{
    base_integral_excised, boundary_circle_integral, extrapolate_to_zero, pullback_by_section, ExcisedDisk,
    ExcisedDomain, FormField,
};
use crate::topology::{check_poincare_hopf, find_zeros, section, SectionField, ZeroRecord};

fn echo_config(report: &mut Report, cfg: &ExperimentConfig) {
    let q = &cfg.quadrature;
    report.meta("surface", format!("{:?}", cfg.manifold.surface).to_lowercase());
    report.meta("metric", &cfg.manifold.metric);
    match &cfg.connection {
        ConnectionKind::Cartan => report.meta("connection", "cartan"),
        ConnectionKind::ChernModified => report.meta("connection", "chern_modified"),
        ConnectionKind::Perturbed { amplitude, profile } => {
            report.meta("connection", format!("perturbed({amplitude}, {profile:?})").to_lowercase())
        }
    }
    report.meta("ehresmann", format!("{:?}", cfg.ehresmann).to_lowercase());
    if let Some(v) = &cfg.vector_field {
        report.meta("vector_field", v.id());
    }
    report.meta("seed", cfg.seed);
    report.meta("order_fiber", q.order_fiber);
    report.meta("order_base", q.order_base);
    report.meta("order_boundary", q.order_boundary);
    report.meta("s_order", q.s_order);
    report.meta("epsilon_schedule", format!("{:?}", q.epsilon_schedule));
    report.meta("richardson", q.richardson);
    report.meta("fd_step", q.fd_step);
    report.meta("volume_step", q.volume_step);
}

fn build_bundle(cfg: &ExperimentConfig) -> Result<TransgressionBundle> {
    let atlas = atlas_for(cfg.manifold.surface);
    let spec = cfg.manifold.metric_spec().map_err(|e| e.at_stage("config"))?;
    let metric = install_metric(&atlas, spec).map_err(|e| e.at_stage("metric"))?;
    let model = ConnectionModel::new(atlas, metric, cfg.ehresmann.clone(), cfg.connection.clone());
    Ok(TransgressionBundle::new(model, cfg.quadrature.form_settings()))
}

fn excised_integral(
    integrands: &[FormField],
    bundle: &TransgressionBundle,
    zeros: &[ZeroRecord],
    eps: f64,
    order: usize,
) -> Result<f64> {
    let disks: Vec<ExcisedDisk> =
        zeros.iter().map(|z| ExcisedDisk { chart: z.chart, center: z.location, radius: eps }).collect();
    let dom = ExcisedDomain::new(&bundle.model.atlas, &disks)?;
    base_integral_excised(integrands, &dom, order)
}

/// Excised integral of `[X]*((Ω^D + 𝔈)/V)` over a radius schedule, its limit,
/// boundary circle integrals around each zero and the Stokes balance.
pub fn run_gbc(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report::new(&cfg.scenario, "gbc");
    echo_config(&mut report, cfg);
    let q = &cfg.quadrature;
    let tol = &cfg.checks;
    let bundle = build_bundle(cfg)?;
    let atlas = bundle.model.atlas.clone();
    let chi = atlas.euler_characteristic;
    report.meta("euler_characteristic", chi);

    let spec = cfg.vector_field.clone().ok_or_else(|| GbcError::Config("gbc needs a [vector_field]".into()))?;
    let field = SectionField::new(atlas.clone(), spec).map_err(|e| e.at_stage("vector_field"))?;
    let scan = find_zeros(&field, q.zero_grid, &q.epsilon_schedule).map_err(|e| e.at_stage("zeros"))?;
    if !scan.unresolved.is_empty() {
        return Err(GbcError::Topology(format!("{} zero candidates could not be isolated", scan.unresolved.len()))
            .at_stage("zeros"));
    }
    let zeros = scan.zeros;
    let ph: i64 = zeros.iter().map(|z| z.degree).sum();
    report.checks.push(Check::within("poincare_hopf", ph as f64, chi as f64, 0.0));
    if check_poincare_hopf(&zeros, chi).is_err() {
        report.zeros = zeros;
        report.runtime_seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    let integrands: Vec<FormField> = (0..atlas.chart_count())
        .map(|c| pullback_by_section(&bundle.integrand_field(c), &section(&field, c)))
        .collect();
    let boundaries: Vec<FormField> = zeros
        .iter()
        .map(|z| pullback_by_section(&bundle.upsilon1_over_volume(z.chart), &section(&field, z.chart)))
        .collect();
    // without zeros the domain does not depend on the radius
    let schedule: Vec<f64> = if zeros.is_empty() { vec![q.epsilon_schedule[0]] } else { q.epsilon_schedule.clone() };
    for &eps in &schedule {
        let base = excised_integral(&integrands, &bundle, &zeros, eps, q.order_base).map_err(|e| e.at_stage("integrate"))?;
        let boundary = zeros
            .iter()
            .zip(&boundaries)
            .map(|(z, b)| boundary_circle_integral(b, z.location, eps, q.order_boundary))
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| e.at_stage("boundary"))?;
        let stokes = base + boundary.iter().sum::<f64>();
        report.series.push(SeriesRow {
            epsilon: eps,
            base_integral: base,
            normalized: 2.0 * PI * base,
            boundary,
            stokes_residual: stokes,
        });
    }

    let normalized: Vec<f64> = report.series.iter().map(|r| r.normalized).collect();
    let limit = if zeros.is_empty() {
        normalized[0]
    } else {
        extrapolate_to_zero(&schedule, &normalized, q.richardson).map_err(|e| e.at_stage("extrapolate"))?
    };
    report.meta("gbc_limit", format!("{limit:.12}"));
    report.checks.push(Check::within("gbc", limit, chi as f64, tol.gbc));
    for (i, z) in zeros.iter().enumerate() {
        let vals: Vec<f64> = report.series.iter().map(|r| r.boundary[i]).collect();
        let b = extrapolate_to_zero(&schedule, &vals, q.richardson).map_err(|e| e.at_stage("extrapolate"))?;
        report.checks.push(Check::within(format!("boundary_limit_{i}"), b, -(z.degree as f64) / (2.0 * PI), tol.boundary));
    }
    let stokes = report.series.iter().map(|r| r.stokes_residual.abs()).fold(0.0, f64::max);
    report.checks.push(Check::residual("stokes", stokes, tol.stokes));

    if q.convergence_check {
        let eps = *schedule.last().expect("non-empty");
        let fine = excised_integral(&integrands, &bundle, &zeros, eps, 2 * q.order_base)
            .map_err(|e| e.at_stage("integrate"))?;
        let coarse = report.series.last().expect("non-empty").normalized;
        report.checks.push(Check::within("order_doubling", 2.0 * PI * fine, coarse, 0.1 * tol.gbc));
    }
    if let Some(min_var) = tol.min_volume_variation {
        let v = volume_variation(&bundle, 400, cfg.seed).map_err(|e| e.at_stage("volume"))?;
        report.checks.push(Check::exceeds("volume_variation", v, 0.0, min_var));
    }
    report.zeros = zeros;
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `max V / min V − 1` over random base points.
pub fn volume_variation(bundle: &TransgressionBundle, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let (chart, x) = bundle.model.atlas.sample_point(&mut rng);
        let v = bundle.volume(chart, x)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi / lo - 1.0)
}

/// Bigraded algebra, Mathai–Quillen family and pointwise transgression
/// identities for the configured metric and connection.
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report::new(&cfg.scenario, "identities");
    echo_config(&mut report, cfg);
    let tol = &cfg.checks;
    report.checks.extend(suites::algebra_checks(cfg.seed, tol.algebra).map_err(|e| e.at_stage("algebra"))?);
    let bundle = build_bundle(cfg)?;
    let points = suites::sample_points(&bundle, tol.identity_points, cfg.seed);
    let r = suites::identity_residuals(&bundle, &points).map_err(|e| e.at_stage("identities"))?;
    report.checks.extend(suites::identity_checks(&r, tol.identity, tol.exact));
    let mq_points = suites::sample_points(&bundle, tol.mathai_quillen_points, cfg.seed ^ 0x9e37);
    let (closed, flow) =
        suites::mathai_quillen_residuals(&bundle, &mq_points, cfg.seed).map_err(|e| e.at_stage("mathai_quillen"))?;
    report.checks.push(Check::residual("mathai_quillen_closed", closed, tol.mathai_quillen));
    report.checks.push(Check::residual("mathai_quillen_transgression", flow, tol.mathai_quillen));
    report.meta("identity_points", tol.identity_points);
    report.meta("mathai_quillen_points", tol.mathai_quillen_points);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Sums of random Minkowski norms and Cartan-tensor identities over the
/// metric zoo.
pub fn run_minkowski_props(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report::new(&cfg.scenario, "minkowski-props");
    let tol = &cfg.checks;
    report.meta("seed", cfg.seed);
    report.meta("norm_pairs", tol.norm_pairs);
    report.meta("rays_per_pair", tol.rays_per_pair);
    let stats = suites::sum_norm_suite(tol.norm_pairs, tol.rays_per_pair, cfg.seed).map_err(|e| e.at_stage("norms"))?;
    report.meta("worst_homogeneity", format!("{:.3e}", stats.worst_homogeneity));
    report.meta("min_eigenvalue", format!("{:.6e}", stats.min_eigenvalue));
    report.checks.extend(suites::sum_norm_checks(&stats));
    let (contraction, riemannian) = suites::cartan_suite(50, cfg.seed).map_err(|e| e.at_stage("cartan"))?;
    report.checks.extend(suites::cartan_checks(contraction, riemannian));
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Winding degrees of model zeros and Poincaré–Hopf sums of the built-in
/// vector fields.
pub fn run_degrees(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = Report::new(&cfg.scenario, "degrees");
    report.meta("zero_grid", cfg.quadrature.zero_grid);
    report.checks.extend(suites::topology_checks(cfg.quadrature.zero_grid).map_err(|e| e.at_stage("degrees"))?);
    report.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// A default configuration for commands that do not depend on the manifold.
pub fn standalone_config(scenario: &str) -> ExperimentConfig {
    ExperimentConfig::new(scenario, Surface::Plane, &MetricSpec::Euclidean)
}

