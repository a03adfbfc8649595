//! Left-endpoint Riemann sums against Lévy drivers.
//!
//! The G-integral of an adapted integrand `Φ` against a driver `M` is the L²
//! limit of `Σ Φ_{t_i} (M_{t_{i+1}} - M_{t_i})` as the partition is refined.
//! `Φ` is read at the left endpoint itself, not its left limit, so a jump of
//! `Φ` sitting on `t_i` enters the sum; a jump of `M` inside `(t_i, t_{i+1}]`
//! is always weighted with the pre-jump value.

use std::io::Write;

use ndarray::{Array2, Array3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{PathEnsemble, TimeGrid};
use crate::levy::{martingale_part, JumpRecord, LevySpec};
use crate::stats::{self, Estimate};

/// Per-path values of a Riemann sum at the partition's end time.
#[derive(Debug, Clone)]
pub struct RiemannSumResult {
    /// `(n_paths, dim)`
    pub values: Array2<f64>,
    pub partition: TimeGrid,
    pub mesh: f64,
}

impl RiemannSumResult {
    pub fn time(&self) -> f64 {
        self.partition.horizon()
    }

    pub fn scalar(&self, p: usize) -> f64 {
        self.values[[p, 0]]
    }

    pub fn scalars(&self) -> Vec<f64> {
        self.values.column(0).to_vec()
    }
}

fn check_pair(phi: &PathEnsemble, m: &PathEnsemble) -> Result<()> {
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    if m.dim() != 1 {
        return Err(Error::Consistency(format!(
            "integrator must be scalar, has dimension {}",
            m.dim()
        )));
    }
    if phi.n_paths() != m.n_paths() {
        return Err(Error::Consistency(format!(
            "integrand has {} paths, integrator {}",
            phi.n_paths(),
            m.n_paths()
        )));
    }
    if let (Some(a), Some(b)) = (phi.seed(), m.seed()) {
        if a != b || phi.first_path() != m.first_path() {
            return Err(Error::Consistency(
                "integrand and integrator do not share random streams".into(),
            ));
        }
    }
    Ok(())
}

/// `Σ_i Φ_{t_i} (M_{t_{i+1}} - M_{t_i})` over `partition`, per path.
pub fn riemann_sum(
    phi: &PathEnsemble,
    m: &PathEnsemble,
    partition: &TimeGrid,
) -> Result<RiemannSumResult> {
    check_pair(phi, m)?;
    let phi_idx = phi.grid().embed(partition)?;
    let m_idx = m.grid().embed(partition)?;
    let dim = phi.dim();
    let mut values = Array2::zeros((phi.n_paths(), dim));
    let pv = phi.values();
    let mv = m.values();
    for p in 0..phi.n_paths() {
        for i in 0..partition.n_intervals() {
            let dm = mv[[p, m_idx[i + 1], 0]] - mv[[p, m_idx[i], 0]];
            for k in 0..dim {
                values[[p, k]] += pv[[p, phi_idx[i], k]] * dm;
            }
        }
    }
    Ok(RiemannSumResult {
        values,
        mesh: partition.mesh(),
        partition: partition.clone(),
    })
}

/// Jumps of `M` that sit exactly on grid points `t_j`, `j >= 1`, as `(j, size)`.
pub(crate) fn on_grid_jumps(grid: &TimeGrid, record: &JumpRecord) -> Vec<(usize, usize)> {
    record
        .times()
        .iter()
        .enumerate()
        .filter_map(|(i, &t)| grid.locate_exact(t).filter(|&j| j > 0).map(|j| (j, i)))
        .collect()
}

/// The integral process `Y_{t_j} = Σ_{i<j} Φ_{t_i} ΔM_i` at every grid point.
///
/// Jumps of `M` on grid points carry over as jumps `Φ_{t_{j-1}}·ΔM` of `Y`.
pub fn g_integral_process(phi: &PathEnsemble, m: &PathEnsemble) -> Result<PathEnsemble> {
    check_pair(phi, m)?;
    if phi.grid() != m.grid() {
        return Err(Error::Grid(
            "integrand and integrator must share a grid".into(),
        ));
    }
    let (n_paths, n_points, dim) = phi.values().dim();
    let pv = phi.values();
    let mv = m.values();
    let mut out = Array3::zeros((n_paths, n_points, dim));
    for p in 0..n_paths {
        for j in 1..n_points {
            let dm = mv[[p, j, 0]] - mv[[p, j - 1, 0]];
            for k in 0..dim {
                out[[p, j, k]] = out[[p, j - 1, k]] + pv[[p, j - 1, k]] * dm;
            }
        }
    }
    let mut ens = PathEnsemble::from_values(phi.grid().clone(), out)?.with_adapted(true);
    if let Some(seed) = m.seed().or(phi.seed()) {
        let first = if m.seed().is_some() {
            m.first_path()
        } else {
            phi.first_path()
        };
        ens = ens.with_seed(seed, first);
    }
    if m.is_continuous() {
        return Ok(ens.with_continuous(true));
    }
    match m.jumps() {
        Some(records) => {
            let jumps = records
                .iter()
                .enumerate()
                .map(|(p, rec)| {
                    let mut times = Vec::new();
                    let mut sizes = Vec::new();
                    for (j, i) in on_grid_jumps(phi.grid(), rec) {
                        times.push(rec.times()[i]);
                        let dm = rec.size(i)[0];
                        sizes.extend((0..dim).map(|k| pv[[p, j - 1, k]] * dm));
                    }
                    JumpRecord::new(times, sizes, dim)
                })
                .collect::<Result<Vec<_>>>()?;
            ens.with_jumps(jumps)
        }
        None => Ok(ens),
    }
}

/// Left-rule Lebesgue integral `Σ_{i<j} Φ_{t_i} Δt_i` at every grid point.
pub fn bochner_integral(phi: &PathEnsemble) -> Result<PathEnsemble> {
    let (n_paths, n_points, dim) = phi.values().dim();
    if n_points < 2 {
        return Err(Error::Grid("need at least one interval".into()));
    }
    let pts = phi.grid().points();
    let pv = phi.values();
    let mut out = Array3::zeros((n_paths, n_points, dim));
    for p in 0..n_paths {
        for j in 1..n_points {
            let dt = pts[j] - pts[j - 1];
            for k in 0..dim {
                out[[p, j, k]] = out[[p, j - 1, k]] + pv[[p, j - 1, k]] * dt;
            }
        }
    }
    let mut ens = PathEnsemble::from_values(phi.grid().clone(), out)?
        .with_adapted(phi.is_adapted())
        .with_continuous(true);
    if let Some(seed) = phi.seed() {
        ens = ens.with_seed(seed, phi.first_path());
    }
    Ok(ens)
}

/// `(G-)(Φ·X) = (G-)(Φ·M) + b·(G-)(Φ·λ)` for `X = M + b·t`.
pub fn levy_integral(
    phi: &PathEnsemble,
    spec: &LevySpec,
    x: &PathEnsemble,
) -> Result<PathEnsemble> {
    let m = martingale_part(spec, x)?;
    let stochastic = g_integral_process(phi, &m)?;
    let b = spec.decomposition_drift();
    if b == 0.0 {
        return Ok(stochastic);
    }
    let lebesgue = bochner_integral(phi)?;
    stochastic.linear_combination(1.0, &lebesgue, b)
}

/// Uniform partition of `[0, t]` with step `h`; `t / h` must be an integer.
pub fn uniform_partition(t: f64, h: f64) -> Result<TimeGrid> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("mesh", format!("must be positive, got {h}")));
    }
    let steps = (t / h).round();
    if steps < 1.0 || (steps * h - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Grid(format!("mesh {h} does not divide [0, {t}]")));
    }
    TimeGrid::uniform(t, steps as usize)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeshRow {
    pub mesh: f64,
    /// Squared L² difference `E‖Y^mesh - Y^target‖²`.
    pub diff: f64,
    pub se: f64,
}

/// Squared L² differences of partition sums against a target, per mesh.
#[derive(Debug, Clone, Serialize)]
pub struct MeshStudy {
    pub rows: Vec<MeshRow>,
    /// Least-squares slope of `ln diff` against `ln mesh` over positive diffs.
    pub rate: Option<f64>,
}

impl MeshStudy {
    pub(crate) fn from_rows(rows: Vec<MeshRow>) -> Self {
        let meshes: Vec<f64> = rows.iter().map(|r| r.mesh).collect();
        let diffs: Vec<f64> = rows.iter().map(|r| r.diff).collect();
        let rate = stats::log_log_slope(&meshes, &diffs);
        MeshStudy { rows, rate }
    }

    pub fn diffs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.diff).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].diff < w[0].diff)
    }

    /// Each refinement lowers the difference, allowing `k` combined SEs.
    pub fn decreasing_within(&self, k: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].diff <= w[0].diff + k * (w[0].se.powi(2) + w[1].se.powi(2)).sqrt())
    }

    pub fn write_columnar<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "mesh,diff,se")?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.mesh, r.diff, r.se)?;
        }
        Ok(())
    }
}

/// Cauchy study of partition sums on `[0, t]`: the finest mesh is the
/// reference and every mesh reports `E‖Y^mesh - Y^finest‖²`. All partitions
/// are evaluated on the same paths.
pub fn mesh_convergence_study(
    phi: &PathEnsemble,
    m: &PathEnsemble,
    meshes: &[f64],
    t: f64,
) -> Result<MeshStudy> {
    if meshes.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a mesh study needs at least 3 meshes, got {}",
            meshes.len()
        )));
    }
    if meshes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("meshes", "must be strictly decreasing"));
    }
    let sums = meshes
        .iter()
        .map(|&h| riemann_sum(phi, m, &uniform_partition(t, h)?))
        .collect::<Result<Vec<_>>>()?;
    let reference = sums.last().expect("non-empty");
    let rows = sums
        .iter()
        .map(|s| {
            let per_path: Vec<f64> = s
                .values
                .rows()
                .into_iter()
                .zip(reference.values.rows())
                .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).powi(2)).sum())
                .collect();
            let est = stats::mean(&per_path);
            MeshRow {
                mesh: s.mesh,
                diff: est.value,
                se: est.se,
            }
        })
        .collect();
    Ok(MeshStudy::from_rows(rows))
}

/// Sample covariance of `Φ_{t_i}` (coordinate `k`) with `M_{t_{i+1}} - M_{t_i}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntervalCovariance {
    pub start: f64,
    pub coord: usize,
    pub cov: Estimate,
}

/// Covariances between integrand values and the following integrator
/// increments over each interval of `partition`. For adapted `Φ` against a
/// martingale these vanish.
pub fn increment_covariances(
    phi: &PathEnsemble,
    m: &PathEnsemble,
    partition: &TimeGrid,
) -> Result<Vec<IntervalCovariance>> {
    check_pair(phi, m)?;
    let phi_idx = phi.grid().embed(partition)?;
    let m_idx = m.grid().embed(partition)?;
    let n = phi.n_paths();
    let mut out = Vec::new();
    for i in 0..partition.n_intervals() {
        let dm: Vec<f64> = (0..n)
            .map(|p| m.scalar(p, m_idx[i + 1]) - m.scalar(p, m_idx[i]))
            .collect();
        for k in 0..phi.dim() {
            let x: Vec<f64> = (0..n).map(|p| phi.values()[[p, phi_idx[i], k]]).collect();
            out.push(IntervalCovariance {
                start: partition.points()[i],
                coord: k,
                cov: stats::covariance(&x, &dm),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::simulate_paths;

    fn brownian(n_paths: usize, steps: usize, seed: u64) -> PathEnsemble {
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        simulate_paths(&LevySpec::brownian(1.0), &grid, n_paths, seed).unwrap()
    }

    #[test]
    fn zero_and_unit_integrands() {
        let w = brownian(8, 64, 1);
        let part = uniform_partition(0.5, 1.0 / 16.0).unwrap();
        let zero = w.zeros_like();
        let s = riemann_sum(&zero, &w, &part).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));

        let one = PathEnsemble::deterministic_scalar(w.grid(), 8, |_| 1.0).unwrap();
        let s = riemann_sum(&one, &w, &part).unwrap();
        let j = w.grid().locate(0.5).unwrap();
        for p in 0..8 {
            assert!((s.scalar(p) - (w.scalar(p, j) - w.scalar(p, 0))).abs() < 1e-12);
        }
        assert_eq!(s.time(), 0.5);
    }

    #[test]
    fn non_adapted_or_off_grid_inputs_fail() {
        let w = brownian(2, 8, 1);
        let raw = PathEnsemble::from_values(w.grid().clone(), w.values().clone()).unwrap();
        let part = uniform_partition(1.0, 0.25).unwrap();
        assert!(matches!(
            riemann_sum(&raw, &w, &part),
            Err(Error::NotAdapted)
        ));
        let off = TimeGrid::new(vec![0.0, 0.3, 1.0]).unwrap();
        assert!(matches!(riemann_sum(&w, &w, &off), Err(Error::Grid(_))));
    }

    #[test]
    fn process_with_unit_integrand_reproduces_driver() {
        let w = brownian(4, 32, 2);
        let one = PathEnsemble::deterministic_scalar(w.grid(), 4, |_| 1.0).unwrap();
        let y = g_integral_process(&one, &w).unwrap();
        for (a, b) in y.values().iter().zip(w.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(y.is_adapted());
    }

    #[test]
    fn bochner_of_constant_and_linear() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let c = PathEnsemble::deterministic_scalar(&grid, 1, |_| 3.0).unwrap();
        let ic = bochner_integral(&c).unwrap();
        for (j, t) in grid.points().iter().enumerate() {
            assert!((ic.scalar(0, j) - 3.0 * t).abs() < 1e-14);
        }
        let lin = PathEnsemble::deterministic_scalar(&grid, 1, |t| t).unwrap();
        let il = bochner_integral(&lin).unwrap();
        assert!((il.scalar(0, 10) - (0.5 - 0.05)).abs() < 1e-14);
    }

    #[test]
    fn levy_integral_recombines_decomposition() {
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let spec = LevySpec::brownian(1.0).with_drift(0.7);
        let x = simulate_paths(&spec, &grid, 6, 4).unwrap();
        let one = PathEnsemble::deterministic_scalar(&grid, 6, |_| 1.0).unwrap();
        let y = levy_integral(&one, &spec, &x).unwrap();
        for p in 0..6 {
            for j in 0..grid.len() {
                assert!((y.scalar(p, j) - x.scalar(p, j)).abs() < 1e-12);
            }
        }
        let driftless = LevySpec::brownian(1.0);
        let x0 = simulate_paths(&driftless, &grid, 6, 4).unwrap();
        let a = levy_integral(&x0, &driftless, &x0).unwrap();
        let b = g_integral_process(&x0, &x0).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn mesh_study_rejects_bad_meshes() {
        let w = brownian(4, 16, 1);
        assert!(matches!(
            mesh_convergence_study(&w, &w, &[0.5, 0.25], 1.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(mesh_convergence_study(&w, &w, &[0.25, 0.5, 0.125], 1.0).is_err());
    }

    #[test]
    fn mesh_study_of_constant_integrand_is_exact() {
        let w = brownian(16, 64, 3);
        let c = PathEnsemble::deterministic_scalar(w.grid(), 16, |_| 2.0).unwrap();
        let study =
            mesh_convergence_study(&c, &w, &[0.25, 0.125, 1.0 / 16.0, 1.0 / 64.0], 1.0).unwrap();
        assert_eq!(study.rows.len(), 4);
        for r in &study.rows {
            assert!(r.diff < 1e-24);
        }
    }

    #[test]
    fn integral_process_jumps_follow_on_grid_integrator_jumps() {
        // Poisson integrator with a jump exactly on t = 0.5.
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let spec = LevySpec::standard_poisson(1.0);
        let rec = JumpRecord::scalar(vec![0.5, 0.6], vec![1.0, 1.0]).unwrap();
        let vals = crate::levy::jump_path_values(&spec, &rec, &grid);
        let x = PathEnsemble::from_values(
            grid.clone(),
            Array3::from_shape_vec((1, 5, 1), vals).unwrap(),
        )
        .unwrap()
        .with_adapted(true)
        .with_jumps(vec![rec])
        .unwrap();
        let phi = PathEnsemble::deterministic_scalar(&grid, 1, |t| 1.0 + t).unwrap();
        let y = g_integral_process(&phi, &x).unwrap();
        let jr = &y.jumps().unwrap()[0];
        assert_eq!(jr.times(), &[0.5]);
        // Φ at the left endpoint 0.25.
        assert_eq!(jr.size(0), &[1.25]);
    }
}
