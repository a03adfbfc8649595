use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stochint::cli::{emit_report, run_experiment, ExperimentConfig, Kind};

fn stochint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochint"))
        .args(args)
        .env_remove("STOCHINT_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn files_with_ext(dir: &Path, ext: &str) -> Vec<std::path::PathBuf> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn poisson_identity_passes_with_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = stochint(&["poisson-identity", "--paths", "1000", "--out", out]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.contains("PASS poisson_g_sum"));
    assert_eq!(files_with_ext(dir.path(), "csv").len(), 1);
    assert_eq!(files_with_ext(dir.path(), "json").len(), 1);
    assert_eq!(files_with_ext(dir.path(), "txt").len(), 1);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(&files_with_ext(dir.path(), "json")[0]).unwrap()).unwrap();
    assert!(manifest["results"]["max_abs_residual"].as_f64().unwrap() < 1e-12);
    assert_eq!(manifest["tolerances"]["exact"].as_f64(), Some(1e-12));
}

#[test]
fn negative_intensity_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[[drivers]]\nkind = \"standard_poisson\"\nintensity = -1.0\n",
    );
    let o = stochint(&[
        "poisson-identity",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("intensity"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 3\nsteps = 10\n");
    let o = stochint(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("steps"));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "paths = 200\n[grid]\nsteps = 100\n[tolerances]\nz_sigma = 0.0\n",
    );
    let o = stochint(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn blow_up_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"paths = 2
[grid]
steps = 4
[spde]
dim = 1
eigenvalues = [0.0]
h0 = [1.0]
alpha = { kind = "linear", scale = 1e300 }
sigma = [{ kind = "zero" }]
max_iter = 10
"#,
    );
    let o = stochint(&[
        "spde",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = stochint(&["dump", "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn kind_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "kind = \"spde\"\n");
    let o = stochint(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_integrand_cannot_drive_a_refinement_study() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "integrands = [\"one\"]\n[converge]\ntarget = \"riemann\"\n",
    );
    let o = stochint(&[
        "converge",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("integrands"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path, threads: &'static str| {
        vec![
            "spde".to_string(),
            "--paths".into(),
            "300".into(),
            "--threads".into(),
            threads.into(),
            "--out".into(),
            d.to_string_lossy().into_owned(),
        ]
    };
    for (d, t) in [(a.path(), "1"), (b.path(), "3")] {
        let args = args(d, t);
        let o = stochint(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let fa = files_with_ext(a.path(), "csv");
    let fb = files_with_ext(b.path(), "csv");
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    for ext in ["json", "txt"] {
        let (x, y) = (
            &files_with_ext(a.path(), ext)[0],
            &files_with_ext(b.path(), ext)[0],
        );
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn seed_flag_changes_output_and_hash() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    stochint(&["dump", "--seed", "1", "--out", a.path().to_str().unwrap()]);
    stochint(&["dump", "--seed", "2", "--out", b.path().to_str().unwrap()]);
    let (x, y) = (
        &files_with_ext(a.path(), "csv")[0],
        &files_with_ext(b.path(), "csv")[0],
    );
    assert_ne!(x.file_name(), y.file_name());
    assert_ne!(fs::read(x).unwrap(), fs::read(y).unwrap());
}

#[test]
fn converge_table_has_one_row_per_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "paths = 2000\nintegrands = [\"driver\"]\n[converge]\nmesh_exponents = [3, 4, 5, 6]\n",
    );
    let o = stochint(&[
        "converge",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.code().is_some_and(|c| c <= 1));
    let csv = fs::read_to_string(&files_with_ext(dir.path(), "csv")[0]).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "mesh,diff,se");
    assert_eq!(lines.len(), 5);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(&files_with_ext(dir.path(), "json")[0]).unwrap()).unwrap();
    assert!(manifest["results"]["rate"].is_f64());
}

#[test]
fn ito_formula_target_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "paths = 4000\n[converge]\ntarget = \"ito_formula\"\nmesh_exponents = [4, 6, 8]\n",
    );
    let o = stochint(&[
        "converge",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("ito_formula[h=0.00390625]"));
}

#[test]
fn spde_emits_solution_and_picard_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochint(&[
        "spde",
        "--paths",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csvs = files_with_ext(dir.path(), "csv");
    let names: Vec<String> = csvs
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".picard.csv")));
    assert!(names.iter().any(|n| n.ends_with(".moments.csv")));
    let solution = csvs
        .iter()
        .find(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .matches('.')
                .count()
                == 1
        })
        .unwrap();
    let header = fs::read_to_string(solution).unwrap();
    assert!(header.starts_with("path,t,x0,x1,"));
}

/// Every module-level check family is produced by at least one experiment.
#[test]
fn every_check_is_reachable_from_some_experiment() {
    let mut families = BTreeSet::new();
    let dir = tempfile::tempdir().unwrap();
    for kind in Kind::ALL {
        let mut cfg = ExperimentConfig::defaults(kind);
        cfg.paths = cfg.paths.min(400);
        if let Some(c) = cfg.converge.as_mut() {
            c.mesh_exponents = vec![3, 4, 5, 6];
        }
        let prepared = cfg.prepare(kind).unwrap();
        let outcome = run_experiment(&prepared).unwrap();
        emit_report(&prepared, &outcome, dir.path()).unwrap();
        families.extend(outcome.checks.iter().map(|c| c.family().to_string()));
    }
    let mut ito = ExperimentConfig::defaults(Kind::Converge);
    ito.paths = 400;
    ito.converge.as_mut().unwrap().target = stochint::cli::ConvergeTarget::ItoFormula;
    let prepared = ito.prepare(Kind::Converge).unwrap();
    families.extend(
        run_experiment(&prepared)
            .unwrap()
            .checks
            .iter()
            .map(|c| c.family().to_string()),
    );

    let mut linear = ExperimentConfig::defaults(Kind::Spde);
    linear.paths = 400;
    let s = linear.spde.as_mut().unwrap();
    s.alpha = stochint::cli::CoefficientConfig::zero();
    s.sigma = vec![stochint::cli::CoefficientConfig::scaled(
        stochint::cli::CoefficientKind::Constant,
        1.0,
    )];
    let prepared = linear.prepare(Kind::Spde).unwrap();
    families.extend(
        run_experiment(&prepared)
            .unwrap()
            .checks
            .iter()
            .map(|c| c.family().to_string()),
    );

    for expected in [
        "terminal_mean",
        "terminal_bracket",
        "martingale_mean",
        "isometry",
        "poisson_g_sum",
        "poisson_stieltjes",
        "poisson_difference",
        "cauchy_strictly_decreasing",
        "cauchy_rate",
        "ito_formula",
        "embedding",
        "projection",
        "picard_converged",
        "picard_contraction",
        "linear_oracle",
        "continuity_refinement",
    ] {
        assert!(
            families.contains(expected),
            "no experiment produces `{expected}`: {families:?}"
        );
    }
}
