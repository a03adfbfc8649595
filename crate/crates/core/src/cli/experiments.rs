use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::PathEnsemble;
use crate::identity::{brownian_ito_identity_check, poisson_identity_check};
use crate::integral::{bochner_integral, levy_integral, mesh_convergence_study, uniform_partition};
use crate::ito::{embedding_norm_check, projection_vs_left_limit, IsometrySamples};
use crate::levy::{martingale_part, simulate_driver, LevySpec};
use crate::spde::{
    linear_variance_oracle, mild_solution_picard, refinement_diagnostics, Coefficient,
};
use crate::stats;
use crate::{DriverKind, TimeGrid};

use super::config::{ConvergeTarget, Integrand, Prepared};
use super::Kind;

/// One named pass/fail verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn new(
        name: impl Into<String>,
        pass: bool,
        value: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) -> Self {
        Check {
            name: name.into(),
            pass,
            value,
            threshold,
            detail: detail.into(),
        }
    }

    /// Name without the bracketed instance suffix.
    pub fn family(&self) -> &str {
        self.name.split('[').next().unwrap_or(&self.name)
    }
}

/// A columnar CSV table; `suffix` distinguishes secondary tables.
#[derive(Debug, Clone)]
pub struct Table {
    pub suffix: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Experiment-specific structured results for the manifest.
    pub record: Value,
    /// Tolerances the checks actually used.
    pub applied: BTreeMap<&'static str, f64>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            checks: Vec::new(),
            tables: Vec::new(),
            record: Value::Null,
            applied: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn table(&mut self, suffix: Option<&str>, text: String) {
        self.tables.push(Table {
            suffix: suffix.map(str::to_owned),
            text,
        });
    }
}

fn chunks(n: usize, size: Option<usize>) -> Vec<(usize, usize)> {
    let size = size.unwrap_or(n).max(1);
    (0..n).step_by(size).map(|f| (f, size.min(n - f))).collect()
}

fn integrand_ensemble(which: Integrand, grid: &TimeGrid, x: &PathEnsemble) -> Result<PathEnsemble> {
    let n = x.n_paths();
    match which {
        Integrand::One => PathEnsemble::deterministic_scalar(grid, n, |_| 1.0),
        Integrand::Time => PathEnsemble::deterministic_scalar(grid, n, |t| t),
        Integrand::Cosine => {
            PathEnsemble::deterministic_scalar(grid, n, |t| (2.0 * std::f64::consts::PI * t).cos())
        }
        Integrand::Driver => Ok(x.clone()),
    }
}

fn csv_escape_free(s: &str) -> String {
    s.replace(',', ";")
}

pub fn run_experiment(p: &Prepared) -> Result<Outcome> {
    let out = match p.kind {
        Kind::Simulate => simulate(p),
        Kind::Dump => dump(p),
        Kind::Integrate => integrate(p),
        Kind::Isometry => isometry(p),
        Kind::PoissonIdentity => poisson(p),
        Kind::Converge => converge(p),
        Kind::Spde => spde(p),
        Kind::Diagnostics => diagnostics(p),
    }?;
    if let Some(c) = out.checks.iter().find(|c| c.value.is_nan()) {
        return Err(Error::Numeric(format!("check `{}` produced NaN", c.name)));
    }
    Ok(out)
}

fn simulate(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = &cfg.tolerances;
    let mut out = Outcome::new();
    out.applied.insert("z_sigma", tol.z_sigma);
    let mut text = String::from("driver,t,mean,variance\n");
    let n_points = p.grid.len();
    let horizon = p.grid.horizon();
    let mut records = Vec::new();
    for (d, spec) in p.drivers.iter().enumerate() {
        let mut sum = vec![0.0; n_points];
        let mut sum_sq = vec![0.0; n_points];
        let mut terminal = Vec::with_capacity(cfg.paths);
        for (first, count) in chunks(cfg.paths, cfg.chunk_paths) {
            let x = simulate_driver(spec, &p.grid, d, first as u64, count, cfg.seed)?;
            for q in 0..count {
                for j in 0..n_points {
                    let v = x.scalar(q, j);
                    sum[j] += v;
                    sum_sq[j] += v * v;
                }
                terminal.push(x.scalar(q, n_points - 1));
            }
        }
        let n = cfg.paths as f64;
        for (j, t) in p.grid.points().iter().enumerate() {
            let mean = sum[j] / n;
            writeln!(text, "{d},{t},{mean},{}", sum_sq[j] / n - mean * mean).unwrap();
        }
        let mean = stats::mean(&terminal);
        let var = stats::variance(&terminal);
        let mean_target = spec.decomposition_drift() * horizon;
        let var_target = spec.bracket_rate() * horizon;
        out.checks.push(Check::new(
            format!("terminal_mean[{d}]"),
            mean.z(mean_target).abs() < tol.z_sigma,
            mean.z(mean_target),
            tol.z_sigma,
            format!(
                "E[X_T] = {} ± {}, expected {mean_target}",
                mean.value, mean.se
            ),
        ));
        out.checks.push(Check::new(
            format!("terminal_bracket[{d}]"),
            var.z(var_target).abs() < tol.z_sigma,
            var.z(var_target),
            tol.z_sigma,
            format!(
                "Var[X_T] = {} ± {}, expected c·T = {var_target}",
                var.value, var.se
            ),
        ));
        records.push(json!({"driver": spec, "terminal_mean": mean, "terminal_variance": var}));
    }
    out.table(None, text);
    out.record = json!({ "drivers": records });
    Ok(out)
}

fn dump(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let n = cfg.dump_paths.unwrap_or(cfg.paths).min(cfg.paths);
    let mut out = Outcome::new();
    for (d, spec) in p.drivers.iter().enumerate() {
        let x = simulate_driver(spec, &p.grid, d, 0, n, cfg.seed)?;
        let mut buf = Vec::new();
        x.write_columnar(&mut buf)?;
        let suffix = (p.drivers.len() > 1).then(|| format!("driver{d}"));
        out.table(suffix.as_deref(), String::from_utf8(buf).expect("ascii"));
        let finite = x.values().iter().all(|v| v.is_finite());
        out.checks.push(Check::new(
            format!("finite_paths[{d}]"),
            finite,
            if finite { 0.0 } else { 1.0 },
            0.0,
            format!("{n} paths, {} points", p.grid.len()),
        ));
    }
    out.record = json!({ "paths_written": n, "drivers": p.drivers });
    Ok(out)
}

fn integrate(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = &cfg.tolerances;
    let spec = &p.drivers[0];
    let mut out = Outcome::new();
    out.applied.insert("z_sigma", tol.z_sigma);
    let k = cfg.integrands.len();
    let mut values = vec![Vec::with_capacity(cfg.paths); k];
    let mut centred = vec![Vec::with_capacity(cfg.paths); k];
    let b = spec.decomposition_drift();
    for (first, count) in chunks(cfg.paths, cfg.chunk_paths) {
        let x = simulate_driver(spec, &p.grid, 0, first as u64, count, cfg.seed)?;
        for (i, &which) in cfg.integrands.iter().enumerate() {
            let phi = integrand_ensemble(which, &p.grid, &x)?;
            let y = levy_integral(&phi, spec, &x)?;
            let drift_part = bochner_integral(&phi)?;
            let last = y.n_points() - 1;
            for q in 0..count {
                let v = y.scalar(q, last);
                values[i].push(v);
                centred[i].push(v - b * drift_part.scalar(q, last));
            }
        }
    }
    let mut text = String::from("path");
    for w in &cfg.integrands {
        write!(text, ",{}", w.name()).unwrap();
    }
    text.push('\n');
    for q in 0..cfg.paths {
        write!(text, "{q}").unwrap();
        for v in &values {
            write!(text, ",{}", v[q]).unwrap();
        }
        text.push('\n');
    }
    out.table(None, text);
    let mut record = Vec::new();
    for (i, w) in cfg.integrands.iter().enumerate() {
        let mean = stats::mean(&values[i]);
        let mart = stats::mean(&centred[i]);
        out.checks.push(Check::new(
            format!("martingale_mean[{}]", w.name()),
            mart.z(0.0).abs() < tol.z_sigma,
            mart.z(0.0),
            tol.z_sigma,
            format!("E[(Φ·M)_T] = {} ± {}", mart.value, mart.se),
        ));
        record.push(json!({"integrand": w.name(), "mean": mean, "martingale_part_mean": mart}));
    }
    out.record = json!({ "driver": spec, "integrals": record });
    Ok(out)
}

fn isometry(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = &cfg.tolerances;
    let mut out = Outcome::new();
    out.applied.insert("isometry_z", tol.isometry_z);
    let mut text = String::from("integrand,driver,lhs,se_lhs,rhs,se_rhs,diff,se_diff,z\n");
    let mut record = Vec::new();
    for (d, spec) in p.drivers.iter().enumerate() {
        let mut samples: Vec<IsometrySamples> = vec![IsometrySamples::new(); cfg.integrands.len()];
        for (first, count) in chunks(cfg.paths, cfg.chunk_paths) {
            let x = simulate_driver(spec, &p.grid, d, first as u64, count, cfg.seed)?;
            let m = martingale_part(spec, &x)?;
            for (i, &which) in cfg.integrands.iter().enumerate() {
                let phi = integrand_ensemble(which, &p.grid, &m)?;
                samples[i].absorb(&phi, spec, &m)?;
            }
        }
        for (i, w) in cfg.integrands.iter().enumerate() {
            let r = samples[i].report();
            let name = format!("isometry[{}×{}]", w.name(), driver_label(spec));
            writeln!(
                text,
                "{},{},{},{},{},{},{},{},{}",
                w.name(),
                csv_escape_free(&driver_label(spec)),
                r.lhs.value,
                r.lhs.se,
                r.rhs.value,
                r.rhs.se,
                r.diff.value,
                r.diff.se,
                r.z
            )
            .unwrap();
            out.checks.push(Check::new(
                name,
                r.passes(tol.isometry_z),
                r.z,
                tol.isometry_z,
                format!("E|∫Φ dM|² = {} vs c·E∫|Φ|² = {}", r.lhs.value, r.rhs.value),
            ));
            record.push(json!({"integrand": w.name(), "driver": spec, "report": r}));
        }
    }
    out.table(None, text);
    out.record = json!({ "matrix": record });
    Ok(out)
}

fn driver_label(spec: &LevySpec) -> String {
    match spec.kind {
        DriverKind::Brownian { volatility } => format!("brownian(σ={volatility})"),
        DriverKind::CompensatedPoisson { intensity } => {
            format!("compensated_poisson(λ={intensity})")
        }
        DriverKind::CompoundPoisson { intensity, .. } => format!("compound_poisson(λ={intensity})"),
    }
}

fn poisson(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = cfg.tolerances.exact;
    let intensity = match p.drivers[0].kind {
        DriverKind::CompensatedPoisson { intensity } => intensity,
        _ => unreachable!("validated at prepare time"),
    };
    let mut out = Outcome::new();
    out.applied.insert("exact", tol);
    let report = poisson_identity_check(
        intensity,
        p.grid.horizon(),
        cfg.paths,
        cfg.seed,
        p.grid.n_intervals(),
    )?;
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    for (name, res, what) in [
        (
            "poisson_g_sum",
            &report.g_residuals,
            "G-sum vs ½(X_T² − X_T)",
        ),
        (
            "poisson_stieltjes",
            &report.stieltjes_residuals,
            "Stieltjes vs ½(X_T² + X_T)",
        ),
        (
            "poisson_difference",
            &report.difference_residuals,
            "Stieltjes − G vs X_T",
        ),
    ] {
        let m = max_abs(res);
        out.checks.push(Check::new(
            name,
            m < tol,
            m,
            tol,
            format!("{what}: max residual {m:e}"),
        ));
    }
    let mut buf = Vec::new();
    report.write_columnar(&mut buf)?;
    out.table(None, String::from_utf8(buf).expect("ascii"));
    out.record = json!({
        "intensity": intensity,
        "max_abs_residual": report.max_abs_residual,
        "g_mean": report.g_mean(),
        "paths": report.n_paths(),
    });
    Ok(out)
}

fn converge(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = &cfg.tolerances;
    let conv = cfg.converge.clone().unwrap_or_default();
    let meshes = conv.meshes();
    let horizon = p.grid.horizon();
    let mut out = Outcome::new();
    let study = match conv.target {
        ConvergeTarget::Riemann => {
            let fine = uniform_partition(horizon, *meshes.last().unwrap())?;
            let spec = &p.drivers[0];
            let x = simulate_driver(spec, &fine, 0, 0, cfg.paths, cfg.seed)?;
            let phi = integrand_ensemble(cfg.integrands[0], &fine, &x)?;
            let m = martingale_part(spec, &x)?;
            let study = mesh_convergence_study(&phi, &m, &meshes, horizon)?;
            out.applied.insert("rate_min", tol.rate_min);
            out.applied.insert("rate_max", tol.rate_max);
            let dec = study.strictly_decreasing();
            out.checks.push(Check::new(
                "cauchy_strictly_decreasing",
                dec,
                if dec { 0.0 } else { 1.0 },
                0.0,
                "squared differences to the finest mesh",
            ));
            let rate = study.rate.unwrap_or(f64::NAN);
            out.checks.push(Check::new(
                "cauchy_rate",
                rate >= tol.rate_min && rate <= tol.rate_max,
                rate,
                tol.rate_max,
                format!(
                    "fitted exponent {rate}, accepted [{}, {}]",
                    tol.rate_min, tol.rate_max
                ),
            ));
            study
        }
        ConvergeTarget::ItoFormula => {
            let study = brownian_ito_identity_check(horizon, &meshes, cfg.paths, cfg.seed)?;
            for row in &study.rows {
                let target = horizon * row.mesh / 2.0;
                let ratio = row.diff / target;
                out.checks.push(Check::new(
                    format!("ito_formula[h={}]", row.mesh),
                    (0.5..=2.0).contains(&ratio),
                    ratio,
                    2.0,
                    format!("E|Σ − ½(W_T² − T)|² = {} vs T·h/2 = {target}", row.diff),
                ));
            }
            study
        }
    };
    let mut buf = Vec::new();
    study.write_columnar(&mut buf)?;
    out.table(None, String::from_utf8(buf).expect("ascii"));
    out.record = json!({ "target": conv.target, "rows": study.rows, "rate": study.rate });
    Ok(out)
}

/// Constant noise levels when the problem is linear with additive noise
/// driven by one process from rest.
fn linear_levels(p: &Prepared) -> Option<Vec<f64>> {
    let problem = p.spde.as_ref()?;
    if !problem.is_linear_additive()
        || problem.drivers.len() != 1
        || problem.h0.iter().any(|v| *v != 0.0)
    {
        return None;
    }
    match &problem.sigmas[0] {
        Coefficient::Constant(v) => Some(v.clone()),
        Coefficient::Zero => Some(vec![0.0; problem.dim()]),
        _ => None,
    }
}

fn spde(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = &cfg.tolerances;
    let scfg = cfg.spde.as_ref().expect("validated");
    let problem = p.spde.as_ref().expect("validated");
    let opts = scfg.options(cfg.chunk_paths);
    let (sol, report) = mild_solution_picard(problem, &p.grid, cfg.paths, cfg.seed, &opts)?;
    let mut out = Outcome::new();
    out.applied.insert("picard_tol", scfg.tol);
    out.applied
        .insert("contraction_ratio", tol.contraction_ratio);

    out.checks.push(Check::new(
        "picard_converged",
        report.converged,
        report.iterations as f64,
        scfg.max_iter as f64,
        format!("final distance {:e} (tol {:e})", report.residual, scfg.tol),
    ));
    let worst = report.contraction_ratio(0).unwrap_or(0.0);
    out.checks.push(Check::new(
        "picard_contraction",
        worst < tol.contraction_ratio,
        worst,
        tol.contraction_ratio,
        format!(
            "largest ratio of consecutive distances over {} iterations",
            report.iterations
        ),
    ));

    let dim = problem.dim();
    if let Some(levels) = linear_levels(p) {
        out.applied.insert("z_sigma", tol.z_sigma);
        out.applied.insert("discretization", tol.discretization);
        let times: Vec<f64> = match &scfg.oracle_times {
            Some(t) => t.clone(),
            None => sol.grid().points()[1..].to_vec(),
        };
        let mut squares = vec![0.0; cfg.paths];
        for &t in &times {
            let j = sol.grid().locate(t).ok_or_else(|| {
                Error::Config(format!("oracle time {t} is not a recorded grid point"))
            })?;
            let oracle = linear_variance_oracle(&problem.operator, &levels, &problem.drivers[0], t);
            for k in 0..dim {
                for (q, s) in squares.iter_mut().enumerate() {
                    *s = sol.values()[[q, j, k]].powi(2);
                }
                let est = stats::mean(&squares);
                let slack = (tol.z_sigma * est.se).max(tol.discretization * oracle[k]);
                let gap = (est.value - oracle[k]).abs();
                out.checks.push(Check::new(
                    format!("linear_oracle[t={t},k={}]", k + 1),
                    gap <= slack,
                    gap,
                    slack,
                    format!("E r_k² = {} ± {} vs {}", est.value, est.se, oracle[k]),
                ));
            }
        }
    }

    let dump_n = cfg.dump_paths.unwrap_or(cfg.paths).min(cfg.paths);
    let mut buf = Vec::new();
    sol.head(dump_n)?.write_columnar(&mut buf)?;
    out.table(None, String::from_utf8(buf).expect("ascii"));

    let mut picard = String::from("iteration,distance\n");
    for (m, d) in report.distances.iter().enumerate() {
        writeln!(picard, "{},{d}", m + 1).unwrap();
    }
    out.table(Some("picard"), picard);

    let mut moments = String::from("t");
    for k in 0..dim {
        write!(moments, ",m{k}").unwrap();
    }
    moments.push('\n');
    for (j, t) in sol.grid().points().iter().enumerate() {
        write!(moments, "{t}").unwrap();
        for k in 0..dim {
            let m = (0..cfg.paths)
                .map(|q| sol.values()[[q, j, k]].powi(2))
                .sum::<f64>()
                / cfg.paths as f64;
            write!(moments, ",{m}").unwrap();
        }
        moments.push('\n');
    }
    out.table(Some("moments"), moments);
    out.record = json!({ "picard": report, "ratios": report.ratios(), "paths_written": dump_n });
    Ok(out)
}

fn diagnostics(p: &Prepared) -> Result<Outcome> {
    let cfg = &p.config;
    let tol = &cfg.tolerances;
    let mut out = Outcome::new();
    out.applied.insert("quadrature", tol.quadrature);
    out.applied.insert("z_sigma", tol.z_sigma);
    out.applied.insert("exact", tol.exact);
    let mut text = String::from(
        "driver,integrand,embedding_lhs,embedding_rhs,operator_ratio,projection_gap\n",
    );
    let mut record = Vec::new();
    for (d, spec) in p.drivers.iter().enumerate() {
        let x = simulate_driver(spec, &p.grid, d, 0, cfg.paths, cfg.seed)?;
        for &w in &cfg.integrands {
            let phi = integrand_ensemble(w, &p.grid, &x)?;
            let emb = embedding_norm_check(&phi)?;
            let gap = projection_vs_left_limit(&phi)?;
            let label = driver_label(spec);
            writeln!(
                text,
                "{},{},{},{},{},{gap}",
                csv_escape_free(&label),
                w.name(),
                emb.lhs.value,
                emb.rhs.value,
                emb.operator_ratio()
            )
            .unwrap();
            out.checks.push(Check::new(
                format!("embedding[{}×{label}]", w.name()),
                emb.holds_with(tol.quadrature, tol.z_sigma),
                emb.lhs.value - emb.rhs.value,
                tol.quadrature,
                format!(
                    "∫E|ᵖΦ|² = {} ≤ T·sup E|Φ|² = {}",
                    emb.lhs.value, emb.rhs.value
                ),
            ));
            out.checks.push(Check::new(
                format!("projection[{}×{label}]", w.name()),
                gap <= tol.exact,
                gap,
                tol.exact,
                "predictable version against left limit",
            ));
            record.push(json!({"driver": spec, "integrand": w.name(), "embedding": emb, "projection_gap": gap}));
        }
    }
    out.table(None, text);

    let mut refinement = Value::Null;
    if let (Some(problem), Some(scfg)) = (&p.spde, &cfg.spde) {
        let steps = scfg.refine_steps.unwrap_or(p.grid.n_intervals());
        let opts = scfg.options(cfg.chunk_paths);
        let r =
            refinement_diagnostics(problem, p.grid.horizon(), steps, cfg.paths, cfg.seed, &opts)?;
        let se = (r.coarse.se.powi(2) + r.fine.se.powi(2)).sqrt();
        out.checks.push(Check::new(
            "continuity_refinement",
            r.decreased,
            r.fine.value,
            r.coarse.value,
            format!(
                "max mean-square increment {} ± {} at h = {}, {} ± {} at h/2 (gap {:.1} SE)",
                r.coarse.value,
                r.coarse.se,
                r.coarse_mesh,
                r.fine.value,
                r.fine.se,
                (r.coarse.value - r.fine.value) / se
            ),
        ));
        refinement = serde_json::to_value(&r).map_err(|e| Error::Numeric(e.to_string()))?;
    }
    out.record = json!({ "curves": record, "refinement": refinement });
    Ok(out)
}
