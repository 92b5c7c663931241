//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines are printed on every run.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use finsler_gbc::cli::run::{run_degrees, run_gbc, run_identity_suite, run_minkowski_props, standalone_config};
use finsler_gbc::cli::{Check, ExperimentConfig, Report};
use finsler_gbc::connection::ConnectionKind;
use finsler_gbc::Result;

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"));
    ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn check<'a>(r: &'a Report, name: &str) -> &'a Check {
    r.check(name).unwrap_or_else(|| panic!("{}: no check `{name}`", r.scenario))
}

fn value(r: &Report, name: &str) -> f64 {
    check(r, name).value
}

fn failing(r: &Report) -> Vec<String> {
    r.checks.iter().filter(|c| !c.pass).map(|c| format!("{}={:.3e}", c.name, c.value)).collect()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn c1() -> Result<Outcome> {
    let t = Instant::now();
    let r = run_gbc(&config("round_sphere"))?;
    let secs = t.elapsed().as_secs_f64();
    let gbc = value(&r, "gbc");
    outcome((gbc - 2.0).abs() <= 1e-2 && secs < 300.0, format!("2π∫ = {gbc:.8} (target 2, tol 1e-2), {secs:.1} s (< 300 s)"))
}

fn c2() -> Result<Outcome> {
    let r = run_gbc(&config("flat_torus"))?;
    let gbc = value(&r, "gbc");
    outcome(gbc.abs() <= 1e-6, format!("2π∫ = {gbc:.3e} (target 0, tol 1e-6)"))
}

fn c3_c4() -> Result<(Outcome, Outcome)> {
    let base = run_gbc(&config("randers"))?;
    let pert = run_gbc(&config("randers_perturbed"))?;
    assert!(matches!(config("randers_perturbed").connection, ConnectionKind::Perturbed { amplitude, .. } if amplitude == 0.2));
    let (a, b) = (value(&base, "gbc"), value(&pert, "gbc"));
    let var = check(&base, "volume_variation");
    let c3 = Outcome {
        pass: (a - 2.0).abs() <= 2e-2 && var.value > 1e-4,
        detail: format!("2π∫ = {a:.8} (target 2, tol 2e-2); max V/min V − 1 = {:.3e} (> 1e-4)", var.value),
    };
    let c4 = Outcome {
        pass: (b - a).abs() <= 2e-2,
        detail: format!("perturbed 2π∫ = {b:.8}, |Δ| = {:.3e} (tol 2e-2)", (b - a).abs()),
    };
    Ok((c3, c4))
}

fn c5() -> Result<Outcome> {
    let mut worst = [0.0f64; 5];
    let names = [
        "transgression_d_pi",
        "integrand_exactness",
        "chern_weil_upsilon0",
        "fiber_volume_form",
        "modified_metric_compatibility",
    ];
    let mut cartan_randers = config("identities_randers");
    cartan_randers.connection = ConnectionKind::Cartan;
    cartan_randers.scenario = "identities_randers_cartan".into();
    for cfg in [config("identities_round"), config("identities_randers"), cartan_randers] {
        assert_eq!(cfg.checks.identity_points, 200);
        let r = run_identity_suite(&cfg)?;
        for (w, n) in worst.iter_mut().zip(names) {
            *w = w.max(value(&r, n));
        }
    }
    let limits = [1e-5, 1e-5, 1e-5, 1e-8, 1e-8];
    let pass = worst.iter().zip(limits).all(|(w, l)| *w < l);
    let detail = names.iter().zip(worst).map(|(n, w)| format!("{n} {w:.1e}")).collect::<Vec<_>>().join(", ");
    outcome(pass, format!("200 points each on round, Randers+perturbed, Randers+Cartan: {detail}"))
}

fn c6() -> Result<Outcome> {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut seen = Vec::new();
    for name in ["round_sphere", "flat_torus_gradient", "stereographic_power"] {
        let r = run_gbc(&config(name))?;
        for (i, z) in r.zeros.iter().enumerate() {
            let b = value(&r, &format!("boundary_limit_{i}"));
            let err = (b + z.degree as f64 / (2.0 * PI)).abs();
            pass &= err < 1e-3;
            seen.push(z.degree);
            lines.push(format!("{}#{i} deg {:+} err {err:.1e}", r.scenario, z.degree));
        }
    }
    pass &= [1, -1, 2].iter().all(|d| seen.contains(d));
    outcome(pass, lines.join(", "))
}

fn c7() -> Result<Outcome> {
    let r = run_identity_suite(&config("identities_round"))?;
    let ell = ["ell_xi_expansion_n2", "ell_xi_expansion_n3", "ell_xi_expansion_n4"].map(|n| value(&r, n));
    let pf = value(&r, "pfaffian_rank3_vanishes");
    let gm = value(&r, "gaussian_moment_identity");
    let pass = ell.iter().all(|v| *v <= 1e-10) && pf == 0.0 && gm <= 1e-12;
    outcome(pass, format!("ℓ·Ξ n=2,3,4 {:.1e}/{:.1e}/{:.1e}; Pf n=3 {pf:e}; Γ identity {gm:.1e}", ell[0], ell[1], ell[2]))
}

fn c8_c9() -> Result<(Outcome, Outcome)> {
    let cfg = standalone_config("minkowski_props");
    assert_eq!((cfg.checks.norm_pairs, cfg.checks.rays_per_pair), (200, 100));
    let r = run_minkowski_props(&cfg)?;
    let fails: f64 = ["sum_norm_homogeneity_failures", "sum_norm_definiteness_failures"].iter().map(|n| value(&r, n)).sum();
    let c8 = Outcome { pass: fails == 0.0, detail: format!("200 pairs × 100 rays, {fails} failures") };
    let (con, rie) = (value(&r, "cartan_y_contraction"), value(&r, "cartan_riemannian_vanishes"));
    let c9 = Outcome {
        pass: con < 1e-10 && rie < 1e-12,
        detail: format!("|y^k A_kij| {con:.1e} (< 1e-10), Riemannian |A| {rie:.1e} (< 1e-12)"),
    };
    Ok((c8, c9))
}

fn c10() -> Result<Outcome> {
    let r = run_degrees(&standalone_config("degrees"))?;
    let f = failing(&r);
    outcome(r.passed(), format!("{} checks, failing: {:?}", r.checks.len(), f))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Result<Outcome>)> = Vec::new();
    results.push((1, c1()));
    results.push((2, c2()));
    match c3_c4() {
        Ok((a, b)) => results.extend([(3, Ok(a)), (4, Ok(b))]),
        Err(e) => results.extend([(3, Err(e)), (4, outcome(false, "criterion 3 failed to run".into()))]),
    }
    results.push((5, c5()));
    results.push((6, c6()));
    results.push((7, c7()));
    match c8_c9() {
        Ok((a, b)) => results.extend([(8, Ok(a)), (9, Ok(b))]),
        Err(e) => results.extend([(8, Err(e)), (9, outcome(false, "criterion 8 failed to run".into()))]),
    }
    results.push((10, c10()));
    let mut all = true;
    for (n, r) in results {
        let (pass, detail) = match r {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!("acceptance criterion {n:>2}: {}  {detail}", if pass { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
