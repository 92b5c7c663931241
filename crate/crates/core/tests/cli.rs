use std::path::{Path, PathBuf};
use std::process::Command;

use finsler_gbc::cli::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler-gbc"))
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const QUICK_SPHERE: &str = r#"
scenario = "quick"
seed = 7

[manifold]
type = "sphere"
metric = "round_sphere"

[vector_field]
type = "rotational"

[quadrature]
order_fiber = 16
order_base = 16
order_boundary = 16
epsilon_schedule = [0.3, 0.2]
convergence_check = false

[checks]
gbc = 0.5
boundary = 0.05
"#;

#[test]
fn shipped_configs_are_valid() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            assert_eq!(path.file_stem().unwrap().to_str().unwrap(), cfg.scenario);
            n += 1;
        }
    }
    assert!(n >= 6);
}

#[test]
fn degrees_command_passes() {
    let out = bin().args(["degrees", "--format", "csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("scenario,check,value,target,error,tolerance,relation,pass"));
    assert!(!text.contains(",false"));
}

#[test]
fn gbc_csv_is_deterministic_and_has_one_row_per_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "quick.toml", QUICK_SPHERE);
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let st = bin().arg("gbc").arg("--config").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
        assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stdout));
        let read = |f: &str| std::fs::read_to_string(out_dir.join(f)).unwrap();
        let series = read("quick.series.csv");
        assert_eq!(series.lines().count(), 1 + 2);
        outputs.push([read("quick.checks.csv"), series, read("quick.zeros.csv"), read("quick.meta.csv")]);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn flag_overrides_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "quick.toml", QUICK_SPHERE);
    let out = bin()
        .arg("gbc")
        .arg("--config")
        .arg(&cfg)
        .args(["--epsilon-schedule", "0.3,0.25,0.2", "--richardson", "off", "--order-base", "12"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[0.3, 0.25, 0.2]"), "{text}");
    assert!(text.contains("richardson               false"));
    assert!(text.contains("order_base               12"));
}

#[test]
fn failing_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "strict.toml", &QUICK_SPHERE.replace("gbc = 0.5", "gbc = 1e-12"));
    let out = bin().arg("gbc").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn errors_exit_with_two_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "scenario = \"bad\"\n[manifold]\ntype = \"sphere\"\nmetric = \"finsler\"\n");
    let out = bin().arg("gbc").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // a Randers form too strong for the sphere fails certification
    let strong = write(
        dir.path(),
        "strong.toml",
        "scenario = \"strong\"\n[manifold]\ntype = \"sphere\"\nmetric = \"randers(1.5)\"\n[vector_field]\ntype = \"rotational\"\n",
    );
    let out = bin().arg("gbc").arg("--config").arg(&strong).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("stage `metric`"));

    let out = bin().arg("gbc").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
