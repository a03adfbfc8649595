//! Predictable versions, the Itô-isometry check, and the embedding bounds.
//!
//! The predictable σ-algebra has no finite representation. It appears here
//! only as a construction discipline: an ensemble is grid-predictable when its
//! value at `t_j` is the left limit `Φ_{t_j-}`. For càdlàg integrands the
//! predictable version is the left-limit process, which is all that is
//! computed; predictable projections of general measurable processes
//! (conditional expectations at predictable times) are not.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{l2_distance, left_limit, ms_continuity_modulus, sup_l2_norm, PathEnsemble};
use crate::integral::{g_integral_process, on_grid_jumps};
use crate::levy::LevySpec;
use crate::stats::{self, Estimate};
use crate::tolerances;

/// The grid-predictable representative of an adapted càdlàg ensemble.
///
/// Continuous inputs are returned unchanged. For jump-carrying inputs each
/// recorded jump that lands exactly on a grid point is removed from that
/// point, walking the jump records (the grid-side walk lives in
/// [`left_limit`]).
pub fn predictable_version(phi: &PathEnsemble) -> Result<PathEnsemble> {
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    if phi.is_continuous() || phi.is_predictable() {
        return Ok(phi.clone().with_predictable(true));
    }
    let records = phi.jumps().ok_or(Error::MissingJumpData)?.to_vec();
    let mut out = phi.clone().with_predictable(true);
    let grid = phi.grid().clone();
    let dim = phi.dim();
    let vals = out.values_mut();
    for (p, rec) in records.iter().enumerate() {
        for (j, i) in on_grid_jumps(&grid, rec) {
            let size = rec.size(i);
            for k in 0..dim {
                vals[[p, j, k]] -= size[k];
            }
        }
    }
    Ok(out)
}

/// Per-path left-rule quadrature `Σ_{i<n} ‖Φ_{t_i}‖² Δt_i`.
fn quadrature_per_path(phi: &PathEnsemble) -> Vec<f64> {
    let pts = phi.grid().points();
    let (n_paths, n_points, dim) = phi.values().dim();
    let v = phi.values();
    (0..n_paths)
        .map(|p| {
            (0..n_points - 1)
                .map(|j| {
                    let sq: f64 = (0..dim).map(|k| v[[p, j, k]].powi(2)).sum();
                    sq * (pts[j + 1] - pts[j])
                })
                .sum()
        })
        .collect()
}

/// Both sides of `∫₀ᵀ E‖ᵖΦ_t‖² dt ≤ T·sup_t E‖Φ_t‖²`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmbeddingReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub horizon: f64,
    pub holds: bool,
}

impl EmbeddingReport {
    /// `lhs <= rhs + abs_slack + k·(combined SE)`.
    pub fn holds_with(&self, abs_slack: f64, k: f64) -> bool {
        let se = (self.lhs.se.powi(2) + self.rhs.se.powi(2)).sqrt();
        self.lhs.value <= self.rhs.value + abs_slack + k * se
    }

    /// Ratio `sqrt(lhs / sup E‖Φ‖²)`, bounded by `sqrt(T)` for the embedding.
    pub fn operator_ratio(&self) -> f64 {
        let sup = self.rhs.value / self.horizon;
        if sup > 0.0 {
            (self.lhs.value / sup).sqrt()
        } else {
            0.0
        }
    }
}

pub fn embedding_norm_check(phi: &PathEnsemble) -> Result<EmbeddingReport> {
    let pphi = predictable_version(phi)?;
    let lhs = stats::mean(&quadrature_per_path(&pphi));
    let horizon = phi.grid().horizon();
    let sup = phi
        .second_moments()
        .into_iter()
        .fold(Estimate::exact(0.0), |acc, e| {
            if e.value > acc.value {
                e
            } else {
                acc
            }
        });
    let rhs = Estimate {
        value: horizon * sup.value,
        se: horizon * sup.se,
    };
    let mut report = EmbeddingReport {
        lhs,
        rhs,
        horizon,
        holds: false,
    };
    report.holds = report.holds_with(tolerances::QUADRATURE, tolerances::Z_SIGMA);
    Ok(report)
}

/// Zero seminorm forces a zero curve: the report pairs the quadrature
/// seminorm `∫E‖ᵖΦ‖²dt` with the sup-L² norm.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InjectivityReport {
    pub seminorm: f64,
    pub norm: f64,
    pub tolerance: f64,
    /// Bound on the norm implied by `seminorm <= tolerance` on this grid,
    /// using the last interval's mean-square increment for the end point.
    pub implied_norm_bound: f64,
    pub witnessed: bool,
}

pub fn injectivity_witness(phi: &PathEnsemble, tolerance: f64) -> Result<InjectivityReport> {
    let pphi = predictable_version(phi)?;
    let seminorm = stats::mean(&quadrature_per_path(&pphi)).value;
    let norm = sup_l2_norm(phi)?;
    let grid = phi.grid();
    let last_gap = grid.gaps().last().expect("one interval");
    let last_incr = ms_continuity_modulus(phi)?
        .entries
        .last()
        .map(|e| e.norm)
        .unwrap_or(0.0);
    let implied_norm_bound = (tolerance / grid.min_gap())
        .sqrt()
        .max((tolerance / last_gap).sqrt() + last_incr);
    let witnessed = if seminorm <= tolerance {
        norm <= implied_norm_bound
    } else {
        norm > 0.0
    };
    Ok(InjectivityReport {
        seminorm,
        norm,
        tolerance,
        implied_norm_bound,
        witnessed,
    })
}

/// Monte Carlo comparison of `E‖(ᵖΦ·M)_T‖²` with `c·E Σ ‖ᵖΦ_{t_i}‖² Δt_i`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IsometryReport {
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// Path-paired difference `lhs - rhs`.
    pub diff: Estimate,
    pub z: f64,
}

impl IsometryReport {
    pub fn passes(&self, max_z: f64) -> bool {
        self.z.abs() < max_z
    }
}

/// Per-path isometry samples; absorbs ensembles chunk by chunk.
#[derive(Debug, Clone, Default)]
pub struct IsometrySamples {
    lhs: Vec<f64>,
    rhs: Vec<f64>,
}

impl IsometrySamples {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, phi: &PathEnsemble, spec: &LevySpec, m: &PathEnsemble) -> Result<()> {
        spec.validate()?;
        if spec.decomposition_drift() != 0.0 {
            return Err(Error::Domain(format!(
                "isometry needs a martingale driver, drift is {}",
                spec.decomposition_drift()
            )));
        }
        if let Some(o) = m.origin() {
            if o.martingale() != spec.martingale() {
                return Err(Error::Consistency(
                    "integrator was not generated from spec".into(),
                ));
            }
        }
        let pphi = predictable_version(phi)?;
        let y = g_integral_process(&pphi, m)?;
        let last = y.n_points() - 1;
        let c = spec.bracket_rate();
        for (p, q) in quadrature_per_path(&pphi).into_iter().enumerate() {
            let sq: f64 = y.path(p).row(last).iter().map(|v| v * v).sum();
            self.lhs.push(sq);
            self.rhs.push(c * q);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lhs.is_empty()
    }

    pub fn report(&self) -> IsometryReport {
        let diffs: Vec<f64> = self.lhs.iter().zip(&self.rhs).map(|(a, b)| a - b).collect();
        let diff = stats::mean(&diffs);
        IsometryReport {
            lhs: stats::mean(&self.lhs),
            rhs: stats::mean(&self.rhs),
            diff,
            z: diff.z(0.0),
        }
    }
}

pub fn ito_isometry_check(
    phi: &PathEnsemble,
    spec: &LevySpec,
    m: &PathEnsemble,
) -> Result<IsometryReport> {
    let mut samples = IsometrySamples::new();
    samples.absorb(phi, spec, m)?;
    Ok(samples.report())
}

/// Grid quadrature of `∫₀ᵀ E‖ᵖΦ_t - Φ_{t-}‖² dt`. Both processes are left
/// limits built along different walks, so the result is zero up to rounding.
pub fn projection_vs_left_limit(phi: &PathEnsemble) -> Result<f64> {
    let projected = predictable_version(phi)?;
    let limited = left_limit(phi)?;
    let diff = projected.sub(&limited)?;
    Ok(stats::mean(&quadrature_per_path(&diff)).value)
}

/// Sup-L² distance between `(G-)(Φ·M)` and the left-endpoint sum of the
/// predictable version read just after each left endpoint,
/// `ᵖΦ_{t_i+} = ᵖΦ_{t_i} + ΔΦ_{t_i}`. Zero up to rounding.
pub fn g_vs_predictable_distance(phi: &PathEnsemble, m: &PathEnsemble) -> Result<f64> {
    let g = g_integral_process(phi, m)?;
    let pphi = predictable_version(phi)?;
    let mut right = pphi.clone();
    if let Some(records) = phi.jumps() {
        let grid = phi.grid().clone();
        let dim = phi.dim();
        let vals = right.values_mut();
        for (p, rec) in records.iter().enumerate() {
            for (j, i) in on_grid_jumps(&grid, rec) {
                for k in 0..dim {
                    vals[[p, j, k]] += rec.size(i)[k];
                }
            }
        }
    }
    let ito = g_integral_process(&right, m)?;
    l2_distance(&g, &ito)
}

/// `ᵖΦ` written with its seminorm, for reports.
pub fn l2_seminorm(phi: &PathEnsemble) -> Result<f64> {
    let pphi = predictable_version(phi)?;
    Ok(stats::mean(&quadrature_per_path(&pphi)).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::levy::{simulate_paths, JumpRecord};
    use ndarray::Array3;

    fn poisson_with_jump_at_half() -> PathEnsemble {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let spec = LevySpec::standard_poisson(1.0);
        let rec = JumpRecord::scalar(vec![0.5, 0.8], vec![1.0, 1.0]).unwrap();
        let vals = crate::levy::jump_path_values(&spec, &rec, &grid);
        PathEnsemble::from_values(grid, Array3::from_shape_vec((1, 5, 1), vals).unwrap())
            .unwrap()
            .with_adapted(true)
            .with_jumps(vec![rec])
            .unwrap()
    }

    #[test]
    fn predictable_version_of_continuous_is_identity() {
        let grid = TimeGrid::uniform(1.0, 20).unwrap();
        let w = simulate_paths(&LevySpec::brownian(1.0), &grid, 5, 1).unwrap();
        let pw = predictable_version(&w).unwrap();
        assert_eq!(pw.values(), w.values());
        assert!(pw.is_predictable());
    }

    #[test]
    fn predictable_version_excludes_jump_at_its_time() {
        let x = poisson_with_jump_at_half();
        let px = predictable_version(&x).unwrap();
        assert_eq!(px.scalar(0, 2), 0.0);
        assert_eq!(px.scalar(0, 3), 1.0);
        assert_eq!(px.scalar(0, 4), 2.0);
        assert_eq!(projection_vs_left_limit(&x).unwrap(), 0.0);
    }

    #[test]
    fn predictable_version_requires_adapted() {
        let x = poisson_with_jump_at_half().with_adapted(false);
        assert!(matches!(predictable_version(&x), Err(Error::NotAdapted)));
    }

    #[test]
    fn embedding_bound_on_deterministic_curves() {
        let grid = TimeGrid::uniform(2.0, 100).unwrap();
        let one = PathEnsemble::deterministic_scalar(&grid, 1, |_| 1.0).unwrap();
        let r = embedding_norm_check(&one).unwrap();
        assert!((r.lhs.value - 2.0).abs() < 1e-12);
        assert_eq!(r.rhs.value, 2.0);
        assert!(r.holds);

        let grid = TimeGrid::uniform(1.0, 1000).unwrap();
        let lin = PathEnsemble::deterministic_scalar(&grid, 1, |t| t).unwrap();
        let r = embedding_norm_check(&lin).unwrap();
        // Left rule for ∫ t² dt: 1/3 - h/2 + h²/6.
        let h = 1e-3;
        assert!((r.lhs.value - (1.0 / 3.0 - h / 2.0 + h * h / 6.0)).abs() < 1e-12);
        assert_eq!(r.rhs.value, 1.0);
        assert!(r.holds);
    }

    #[test]
    fn injectivity_cases() {
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let zero = PathEnsemble::deterministic_scalar(&grid, 2, |_| 0.0).unwrap();
        let r = injectivity_witness(&zero, 1e-12).unwrap();
        assert_eq!((r.seminorm, r.norm), (0.0, 0.0));
        assert!(r.witnessed);
        let vanishing =
            PathEnsemble::deterministic_scalar(&grid, 2, |t| (t - 1.0).max(0.0)).unwrap();
        let r = injectivity_witness(&vanishing, 1e-12).unwrap();
        assert_eq!((r.seminorm, r.norm), (0.0, 0.0));
        let eps = PathEnsemble::deterministic_scalar(&grid, 2, |_| 1e-3).unwrap();
        let r = injectivity_witness(&eps, 1e-12).unwrap();
        assert!((r.seminorm - 1e-6).abs() < 1e-15);
        assert!((r.norm - 1e-3).abs() < 1e-15);
        assert!(r.witnessed);
    }

    #[test]
    fn isometry_rejects_drifted_driver() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let spec = LevySpec::brownian(1.0).with_drift(1.0);
        let x = simulate_paths(&spec, &grid, 4, 1).unwrap();
        let one = PathEnsemble::deterministic_scalar(&grid, 4, |_| 1.0).unwrap();
        assert!(matches!(
            ito_isometry_check(&one, &spec, &x),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn g_integral_matches_predictable_sum_with_on_grid_jumps() {
        let x = poisson_with_jump_at_half();
        let spec = LevySpec::standard_poisson(1.0);
        let m = crate::levy::martingale_part(&spec, &x.clone().with_origin(spec)).unwrap();
        assert!(g_vs_predictable_distance(&x, &m).unwrap() < 1e-12);
    }
}
