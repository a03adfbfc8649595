//! Exact pathwise identities for `∫ X dX`.
//!
//! For a standard Poisson process the left-endpoint sum converges to
//! `½(X_t² - X_t)` while the pathwise Lebesgue–Stieltjes integral is
//! `½(X_t² + X_t)`. The two differ by `Σ (ΔX)² = X_t`: the Riemann sum
//! weights every jump with the pre-jump value, i.e. it integrates `X_{s-}`.
//! On partitions containing every jump time the identities hold exactly.

use ndarray::Array3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{PathEnsemble, TimeGrid};
use crate::integral::{riemann_sum, uniform_partition, MeshRow, MeshStudy};
use crate::levy::{jump_path_values, sample_jumps, simulate_paths, JumpRecord, LevySpec};
use crate::rng::path_rng;
use crate::stats;
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StieltjesRule {
    /// Weight each jump with the pre-jump value `X_{τ-}`.
    LeftLimit,
    /// Weight each jump with the post-jump value `X_τ`.
    CurrentValue,
}

/// `Σ_{τ_k <= t} X(τ_k∓) ΔX_{τ_k}` for a pure-jump path starting at 0.
pub fn stieltjes_integral(
    spec: &LevySpec,
    record: &JumpRecord,
    t: f64,
    rule: StieltjesRule,
) -> Result<f64> {
    if !spec.is_pure_jump() {
        return Err(Error::Domain(
            "Stieltjes sums need a pure-jump integrator (no Brownian part, no linear drift)".into(),
        ));
    }
    if record.dim() != 1 {
        return Err(Error::Consistency("scalar jump record expected".into()));
    }
    let mut level = 0.0;
    let mut total = 0.0;
    for (&tau, &size) in record.times().iter().zip(record.sizes()) {
        if tau > t {
            break;
        }
        let weight = match rule {
            StieltjesRule::LeftLimit => level,
            StieltjesRule::CurrentValue => level + size,
        };
        total += weight * size;
        level += size;
    }
    Ok(total)
}

/// Per-path values and residuals of the three Poisson identities:
/// (a) G-sum `= ½(X² - X)`, (b) Stieltjes `= ½(X² + X)`, (c) their
/// difference `= X`.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub terminal: Vec<f64>,
    pub g_values: Vec<f64>,
    pub stieltjes_values: Vec<f64>,
    pub g_residuals: Vec<f64>,
    pub stieltjes_residuals: Vec<f64>,
    pub difference_residuals: Vec<f64>,
    pub max_abs_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    pub fn n_paths(&self) -> usize {
        self.terminal.len()
    }

    /// Mean of the G-values with its SE.
    pub fn g_mean(&self) -> stats::Estimate {
        stats::mean(&self.g_values)
    }

    pub fn write_columnar<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "path,x_t,g_sum,stieltjes,g_residual,stieltjes_residual,difference_residual"
        )?;
        for p in 0..self.n_paths() {
            writeln!(
                w,
                "{p},{},{},{},{},{},{}",
                self.terminal[p],
                self.g_values[p],
                self.stieltjes_values[p],
                self.g_residuals[p],
                self.stieltjes_residuals[p],
                self.difference_residuals[p]
            )?;
        }
        Ok(())
    }
}

struct PathIdentity {
    terminal: f64,
    g: f64,
    stieltjes: f64,
}

/// One standard Poisson path on `base ∪ {jump times}`, as a one-path ensemble.
fn jump_separated_path(
    spec: &LevySpec,
    base: &TimeGrid,
    record: &JumpRecord,
) -> Result<PathEnsemble> {
    let grid = base.augmented(record.times())?;
    let vals = jump_path_values(spec, record, &grid);
    let n = vals.len();
    Ok(PathEnsemble::from_values(
        grid,
        Array3::from_shape_vec((1, n, 1), vals).expect("shape"),
    )?
    .with_adapted(true)
    .with_jumps(vec![record.clone()])?
    .with_origin(*spec))
}

fn one_path(spec: &LevySpec, base: &TimeGrid, seed: u64, p: u64) -> Result<PathIdentity> {
    let horizon = base.horizon();
    let record = sample_jumps(spec, horizon, &mut path_rng(seed, p));
    let x = jump_separated_path(spec, base, &record)?;
    let g = riemann_sum(&x, &x, x.grid())?.scalar(0);
    Ok(PathIdentity {
        terminal: x.scalar(0, x.n_points() - 1),
        g,
        stieltjes: stieltjes_integral(spec, &record, horizon, StieltjesRule::CurrentValue)?,
    })
}

/// Checks the Poisson identities on `n_paths` simulated standard Poisson
/// paths. Each path is summed over a uniform base grid of `base_steps`
/// intervals augmented with the path's own jump times.
pub fn poisson_identity_check(
    intensity: f64,
    horizon: f64,
    n_paths: usize,
    seed: u64,
    base_steps: usize,
) -> Result<IdentityReport> {
    let spec = LevySpec::standard_poisson(intensity);
    spec.validate()?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    let base = TimeGrid::uniform(horizon, base_steps)?;
    let per_path = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| one_path(&spec, &base, seed, p))
        .collect::<Result<Vec<_>>>()?;

    let terminal: Vec<f64> = per_path.iter().map(|r| r.terminal).collect();
    let g_values: Vec<f64> = per_path.iter().map(|r| r.g).collect();
    let stieltjes_values: Vec<f64> = per_path.iter().map(|r| r.stieltjes).collect();
    let g_residuals: Vec<f64> = per_path
        .iter()
        .map(|r| r.g - 0.5 * (r.terminal * r.terminal - r.terminal))
        .collect();
    let stieltjes_residuals: Vec<f64> = per_path
        .iter()
        .map(|r| r.stieltjes - 0.5 * (r.terminal * r.terminal + r.terminal))
        .collect();
    let difference_residuals: Vec<f64> = per_path
        .iter()
        .map(|r| (r.stieltjes - r.g) - r.terminal)
        .collect();
    let max_abs_residual = g_residuals
        .iter()
        .chain(&stieltjes_residuals)
        .chain(&difference_residuals)
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let tolerance = tolerances::EXACT;
    Ok(IdentityReport {
        terminal,
        g_values,
        stieltjes_values,
        g_residuals,
        stieltjes_residuals,
        difference_residuals,
        max_abs_residual,
        tolerance,
        pass: max_abs_residual < tolerance,
    })
}

/// Squared L² distance between left-endpoint sums of `∫ W dW` and the Itô
/// formula value `½(W_T² - T)`, one row per mesh. Brownian paths are
/// simulated once on the finest mesh; coarser meshes must nest in it.
pub fn brownian_ito_identity_check(
    horizon: f64,
    meshes: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<MeshStudy> {
    if meshes.is_empty() {
        return Err(Error::InsufficientData("no meshes given".into()));
    }
    if meshes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("meshes", "must be strictly decreasing"));
    }
    if horizon == 0.0 {
        let rows = meshes
            .iter()
            .map(|&mesh| MeshRow {
                mesh,
                diff: 0.0,
                se: 0.0,
            })
            .collect();
        return Ok(MeshStudy::from_rows(rows));
    }
    let finest = uniform_partition(horizon, *meshes.last().unwrap())?;
    let w = simulate_paths(&LevySpec::brownian(1.0), &finest, n_paths, seed)?;
    let last = w.n_points() - 1;
    let target: Vec<f64> = (0..n_paths)
        .map(|p| 0.5 * (w.scalar(p, last).powi(2) - horizon))
        .collect();
    let rows = meshes
        .iter()
        .map(|&h| {
            let sums = riemann_sum(&w, &w, &uniform_partition(horizon, h)?)?;
            let sq: Vec<f64> = (0..n_paths)
                .map(|p| (sums.scalar(p) - target[p]).powi(2))
                .collect();
            let est = stats::mean(&sq);
            Ok(MeshRow {
                mesh: sums.mesh,
                diff: est.value,
                se: est.se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeshStudy::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_jumps(times: &[f64]) -> JumpRecord {
        JumpRecord::scalar(times.to_vec(), vec![1.0; times.len()]).unwrap()
    }

    #[test]
    fn empty_path_gives_zero() {
        let spec = LevySpec::standard_poisson(1.0);
        let rec = JumpRecord::empty(1);
        for rule in [StieltjesRule::LeftLimit, StieltjesRule::CurrentValue] {
            assert_eq!(stieltjes_integral(&spec, &rec, 1.0, rule).unwrap(), 0.0);
        }
    }

    #[test]
    fn triangular_numbers() {
        let spec = LevySpec::standard_poisson(2.0);
        let rec = unit_jumps(&[0.1, 0.2, 0.35, 0.5, 0.9]);
        for k in 0..=5usize {
            // t just past the k-th jump
            let t = if k == 0 {
                0.05
            } else {
                rec.times()[k - 1] + 0.01
            };
            let kf = k as f64;
            let cur = stieltjes_integral(&spec, &rec, t, StieltjesRule::CurrentValue).unwrap();
            let left = stieltjes_integral(&spec, &rec, t, StieltjesRule::LeftLimit).unwrap();
            assert_eq!(cur, kf * (kf + 1.0) / 2.0);
            assert_eq!(left, kf * (kf - 1.0) / 2.0);
            assert_eq!(cur - left, kf);
        }
    }

    #[test]
    fn stieltjes_rejects_non_pure_jump() {
        let rec = unit_jumps(&[0.5]);
        for spec in [LevySpec::compensated_poisson(1.0), LevySpec::brownian(1.0)] {
            assert!(matches!(
                stieltjes_integral(&spec, &rec, 1.0, StieltjesRule::LeftLimit),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn two_jump_path_values() {
        let spec = LevySpec::standard_poisson(1.0);
        let base = TimeGrid::uniform(1.0, 4).unwrap();
        let rec = unit_jumps(&[0.3, 0.6]);
        let x = jump_separated_path(&spec, &base, &rec).unwrap();
        let g = riemann_sum(&x, &x, x.grid()).unwrap().scalar(0);
        let s = stieltjes_integral(&spec, &rec, 1.0, StieltjesRule::CurrentValue).unwrap();
        assert_eq!(g, 1.0);
        assert_eq!(s, 3.0);
        assert_eq!(s - g, 2.0);
    }

    #[test]
    fn jumps_on_base_grid_points_are_still_separated() {
        let spec = LevySpec::standard_poisson(1.0);
        let base = TimeGrid::uniform(1.0, 4).unwrap();
        let rec = unit_jumps(&[0.25, 0.5, 0.75]);
        let x = jump_separated_path(&spec, &base, &rec).unwrap();
        let g = riemann_sum(&x, &x, x.grid()).unwrap().scalar(0);
        assert_eq!(g, 3.0);
    }

    #[test]
    fn identity_check_small_run() {
        let r = poisson_identity_check(1.0, 1.0, 200, 5, 8).unwrap();
        assert!(r.pass, "max residual {}", r.max_abs_residual);
        for p in 0..r.n_paths() {
            if r.terminal[p] == 0.0 {
                assert_eq!((r.g_values[p], r.stieltjes_values[p]), (0.0, 0.0));
            }
        }
    }

    #[test]
    fn degenerate_horizon() {
        let s = brownian_ito_identity_check(0.0, &[0.1], 10, 1).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].diff, 0.0);
    }
}
