//! Time grids, Monte Carlo path ensembles, and the sup-L² curve norm.
//!
//! An ensemble is an empirical L²-curve: `values[[p, j, k]]` is coordinate `k`
//! of path `p` at grid point `t_j`. Expectations are ensemble averages, so the
//! sup-L² norm of a curve is `max_j sqrt(mean_p ‖value[p, j]‖²)`.

use std::io::Write;

use ndarray::{Array3, ArrayView2, Axis};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{JumpRecord, LevySpec};
use crate::stats::{self, Estimate};

/// Relative tolerance used when locating partition points on a grid.
const POINT_MATCH_RTOL: f64 = 1e-12;

/// A strictly increasing partition `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Grid(format!(
                "need at least one interval, got {} point(s)",
                points.len()
            )));
        }
        if points[0] != 0.0 {
            return Err(Error::Grid(format!(
                "grid must start at 0, starts at {}",
                points[0]
            )));
        }
        for w in points.windows(2) {
            if !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::Grid(format!(
                    "points must be finite and strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(TimeGrid { points })
    }

    /// `steps` equal intervals on `[0, horizon]`; the last point is exactly `horizon`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Grid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::Grid("need at least one step".into()));
        }
        let mut points: Vec<f64> = (0..=steps)
            .map(|i| horizon * i as f64 / steps as f64)
            .collect();
        points[steps] = horizon;
        TimeGrid::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn mesh(&self) -> f64 {
        self.gaps().fold(0.0, f64::max)
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps().fold(f64::INFINITY, f64::min)
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| w[1] - w[0])
    }

    /// Index of the grid point equal to `t` up to a relative tolerance.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let tol = POINT_MATCH_RTOL * self.horizon().max(1.0);
        let idx = self.points.partition_point(|&p| p < t - tol);
        (idx < self.points.len() && (self.points[idx] - t).abs() <= tol).then_some(idx)
    }

    /// Index of the grid point exactly equal to `t`.
    pub fn locate_exact(&self, t: f64) -> Option<usize> {
        self.points.binary_search_by(|p| p.total_cmp(&t)).ok()
    }

    /// Indices of `other`'s points in this grid.
    pub fn embed(&self, other: &TimeGrid) -> Result<Vec<usize>> {
        other
            .points
            .iter()
            .map(|&t| {
                self.locate(t)
                    .ok_or_else(|| Error::Grid(format!("partition point {t} is not on the grid")))
            })
            .collect()
    }

    /// The union of this grid with extra times in `(0, T]`, sorted. Times
    /// already present (exactly) are not duplicated.
    pub fn augmented(&self, extra: &[f64]) -> Result<TimeGrid> {
        let mut pts = self.points.clone();
        for &t in extra {
            if !(t > 0.0 && t <= self.horizon()) {
                return Err(Error::Grid(format!("augmenting time {t} outside (0, T]")));
            }
            pts.push(t);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        TimeGrid::new(pts)
    }

    /// Sub-grid keeping every `stride`-th point. The interval count must be
    /// divisible by `stride`.
    pub fn coarsened(&self, stride: usize) -> Result<TimeGrid> {
        if stride == 0 || !self.n_intervals().is_multiple_of(stride) {
            return Err(Error::Grid(format!(
                "stride {stride} does not divide {} intervals",
                self.n_intervals()
            )));
        }
        TimeGrid::new(self.points.iter().copied().step_by(stride).collect())
    }
}

/// Monte Carlo ensemble of sampled paths on a common grid.
///
/// Flags describe how the values were built:
/// * `adapted` — the value at `t_j` used driver information on `[0, t_j]` only;
/// * `continuous` — paths have no jumps;
/// * `predictable` — values at `t_j` are left limits (grid-predictable).
///
/// Jump-carrying ensembles keep the exact jump times and sizes of each path.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: TimeGrid,
    values: Array3<f64>,
    jumps: Option<Vec<JumpRecord>>,
    adapted: bool,
    continuous: bool,
    predictable: bool,
    seed: Option<u64>,
    first_path: u64,
    origin: Option<LevySpec>,
}

impl PathEnsemble {
    /// Wraps raw values of shape `(n_paths, grid.len(), dim)`. The result is
    /// unflagged: not adapted, not continuous, no jump data.
    pub fn from_values(grid: TimeGrid, values: Array3<f64>) -> Result<Self> {
        let (n_paths, n_points, dim) = values.dim();
        if n_points != grid.len() {
            return Err(Error::Consistency(format!(
                "values have {n_points} time points, grid has {}",
                grid.len()
            )));
        }
        if n_paths == 0 {
            return Err(Error::Empty);
        }
        if dim == 0 {
            return Err(Error::Consistency("dimension must be at least 1".into()));
        }
        Ok(PathEnsemble {
            grid,
            values: values.as_standard_layout().into_owned(),
            jumps: None,
            adapted: false,
            continuous: false,
            predictable: false,
            seed: None,
            first_path: 0,
            origin: None,
        })
    }

    /// The same deterministic curve `f(t)` on every path; adapted, continuous
    /// and predictable.
    pub fn deterministic<F>(grid: &TimeGrid, n_paths: usize, dim: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, &mut [f64]),
    {
        if n_paths == 0 {
            return Err(Error::Empty);
        }
        let mut values = Array3::zeros((n_paths, grid.len(), dim));
        let mut row = vec![0.0; dim];
        for (j, &t) in grid.points().iter().enumerate() {
            row.iter_mut().for_each(|x| *x = 0.0);
            f(t, &mut row);
            for p in 0..n_paths {
                for k in 0..dim {
                    values[[p, j, k]] = row[k];
                }
            }
        }
        let mut ens = PathEnsemble::from_values(grid.clone(), values)?;
        ens.adapted = true;
        ens.continuous = true;
        ens.predictable = true;
        Ok(ens)
    }

    /// Scalar deterministic curve.
    pub fn deterministic_scalar<F>(grid: &TimeGrid, n_paths: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        PathEnsemble::deterministic(grid, n_paths, 1, |t, out| out[0] = f(t))
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.values.fill(0.0);
        out.jumps = None;
        out.continuous = true;
        out.predictable = true;
        out
    }

    pub fn with_adapted(mut self, adapted: bool) -> Self {
        self.adapted = adapted;
        self
    }

    pub fn with_continuous(mut self, continuous: bool) -> Self {
        self.continuous = continuous;
        self
    }

    pub fn with_predictable(mut self, predictable: bool) -> Self {
        self.predictable = predictable;
        self
    }

    /// Attaches per-path jump records. Record dimensions must match.
    pub fn with_jumps(mut self, jumps: Vec<JumpRecord>) -> Result<Self> {
        if jumps.len() != self.n_paths() {
            return Err(Error::Consistency(format!(
                "{} jump records for {} paths",
                jumps.len(),
                self.n_paths()
            )));
        }
        if let Some(r) = jumps.iter().find(|r| r.dim() != self.dim()) {
            return Err(Error::Consistency(format!(
                "jump record of dimension {} on a {}-dimensional ensemble",
                r.dim(),
                self.dim()
            )));
        }
        self.jumps = Some(jumps);
        self.continuous = false;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64, first_path: u64) -> Self {
        self.seed = Some(seed);
        self.first_path = first_path;
        self
    }

    pub fn with_origin(mut self, spec: LevySpec) -> Self {
        self.origin = Some(spec);
        self
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn n_paths(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_points(&self) -> usize {
        self.values.dim().1
    }

    pub fn dim(&self) -> usize {
        self.values.dim().2
    }

    pub fn jumps(&self) -> Option<&[JumpRecord]> {
        self.jumps.as_deref()
    }

    pub fn is_adapted(&self) -> bool {
        self.adapted
    }

    pub fn is_continuous(&self) -> bool {
        self.continuous
    }

    pub fn is_predictable(&self) -> bool {
        self.predictable
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn first_path(&self) -> u64 {
        self.first_path
    }

    pub fn origin(&self) -> Option<&LevySpec> {
        self.origin.as_ref()
    }

    /// Path `p` as a `(n_points, dim)` view.
    pub fn path(&self, p: usize) -> ArrayView2<'_, f64> {
        self.values.index_axis(Axis(0), p)
    }

    /// Path `p` as a flat row-major slice of length `n_points * dim`.
    pub fn path_slice(&self, p: usize) -> &[f64] {
        let stride = self.n_points() * self.dim();
        &self.values.as_slice().expect("standard layout")[p * stride..(p + 1) * stride]
    }

    /// Scalar value of path `p` at grid index `j` (coordinate 0).
    pub fn scalar(&self, p: usize, j: usize) -> f64 {
        self.values[[p, j, 0]]
    }

    /// Coordinate `k` as a scalar ensemble.
    pub fn coordinate(&self, k: usize) -> Result<PathEnsemble> {
        if k >= self.dim() {
            return Err(Error::Consistency(format!("coordinate {k} out of range")));
        }
        let values = self
            .values
            .select(Axis(2), &[k])
            .as_standard_layout()
            .into_owned();
        let jumps = self.jumps.as_ref().map(|js| {
            js.iter()
                .map(|r| {
                    let sizes = (0..r.len()).map(|i| r.size(i)[k]).collect();
                    JumpRecord::new(r.times().to_vec(), sizes, 1).expect("valid record")
                })
                .collect()
        });
        Ok(PathEnsemble {
            values,
            jumps,
            origin: None,
            grid: self.grid.clone(),
            ..*self
        })
    }

    /// The ensemble restricted to grid indices `idx` (strictly increasing,
    /// starting at 0).
    pub fn restrict(&self, idx: &[usize]) -> Result<PathEnsemble> {
        let grid = TimeGrid::new(idx.iter().map(|&i| self.grid.points()[i]).collect())?;
        let values = self
            .values
            .select(Axis(1), idx)
            .as_standard_layout()
            .into_owned();
        Ok(PathEnsemble {
            grid,
            values,
            jumps: self.jumps.clone(),
            origin: self.origin,
            ..*self
        })
    }

    /// The first `n` paths.
    pub fn head(&self, n: usize) -> Result<PathEnsemble> {
        if n == 0 || n > self.n_paths() {
            return Err(Error::Consistency(format!(
                "cannot take {n} of {} paths",
                self.n_paths()
            )));
        }
        Ok(PathEnsemble {
            grid: self.grid.clone(),
            values: self.values.slice(ndarray::s![..n, .., ..]).to_owned(),
            jumps: self.jumps.as_ref().map(|j| j[..n].to_vec()),
            origin: self.origin,
            ..*self
        })
    }

    /// The ensemble on `[0, t]`, where `t` must be a grid point.
    pub fn truncated(&self, t: f64) -> Result<PathEnsemble> {
        let end = self
            .grid
            .locate(t)
            .ok_or_else(|| Error::Grid(format!("time {t} is not on the grid")))?;
        let idx: Vec<usize> = (0..=end).collect();
        let mut out = self.restrict(&idx)?;
        if let Some(js) = out.jumps.as_mut() {
            let horizon = out.grid.horizon();
            for r in js.iter_mut() {
                *r = r.truncated(horizon);
            }
        }
        Ok(out)
    }

    pub(crate) fn check_paired(&self, other: &PathEnsemble) -> Result<()> {
        if self.n_paths() != other.n_paths() {
            return Err(Error::Consistency(format!(
                "{} paths vs {} paths",
                self.n_paths(),
                other.n_paths()
            )));
        }
        if self.grid != other.grid {
            return Err(Error::Consistency(
                "ensembles live on different grids".into(),
            ));
        }
        if let (Some(a), Some(b)) = (self.seed, other.seed) {
            if a != b || self.first_path != other.first_path {
                return Err(Error::Consistency(
                    "ensembles come from different random streams".into(),
                ));
            }
        }
        Ok(())
    }

    fn check_same_shape(&self, other: &PathEnsemble) -> Result<()> {
        self.check_paired(other)?;
        if self.dim() != other.dim() {
            return Err(Error::Consistency(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }

    /// `a·self + b·other`, path by path. Jump records are merged and scaled;
    /// flags are the conjunction of both inputs'.
    pub fn linear_combination(&self, a: f64, other: &PathEnsemble, b: f64) -> Result<PathEnsemble> {
        self.check_same_shape(other)?;
        let values = &self.values * a + &other.values * b;
        let jumps = match (self.continuous, other.continuous, &self.jumps, &other.jumps) {
            (true, true, _, _) => None,
            (true, false, _, Some(y)) => Some(y.iter().map(|r| r.scaled(b)).collect()),
            (false, true, Some(x), _) => Some(x.iter().map(|r| r.scaled(a)).collect()),
            (false, false, Some(x), Some(y)) => Some(
                x.iter()
                    .zip(y)
                    .map(|(rx, ry)| rx.scaled(a).merged(&ry.scaled(b)))
                    .collect(),
            ),
            _ => None,
        };
        Ok(PathEnsemble {
            grid: self.grid.clone(),
            values,
            jumps,
            adapted: self.adapted && other.adapted,
            continuous: self.continuous && other.continuous,
            predictable: self.predictable && other.predictable,
            seed: self.seed.or(other.seed),
            first_path: if self.seed.is_some() {
                self.first_path
            } else {
                other.first_path
            },
            origin: None,
        })
    }

    pub fn scaled(&self, a: f64) -> PathEnsemble {
        let mut out = self.clone();
        out.values *= a;
        if let Some(js) = out.jumps.as_mut() {
            for r in js.iter_mut() {
                *r = r.scaled(a);
            }
        }
        out.origin = None;
        out
    }

    pub fn sub(&self, other: &PathEnsemble) -> Result<PathEnsemble> {
        self.linear_combination(1.0, other, -1.0)
    }

    /// Per-grid-point estimates of `E‖r_t‖²`.
    pub fn second_moments(&self) -> Vec<Estimate> {
        let (n_paths, n_points, dim) = self.values.dim();
        let mut samples = vec![0.0; n_paths];
        (0..n_points)
            .map(|j| {
                for (p, s) in samples.iter_mut().enumerate() {
                    *s = (0..dim).map(|k| self.values[[p, j, k]].powi(2)).sum();
                }
                stats::mean(&samples)
            })
            .collect()
    }

    /// Writes one row per (path, grid point): path id, t, value components.
    pub fn write_columnar<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "path,t")?;
        for k in 0..self.dim() {
            write!(w, ",x{k}")?;
        }
        writeln!(w)?;
        for p in 0..self.n_paths() {
            let id = self.first_path + p as u64;
            for (j, t) in self.grid.points().iter().enumerate() {
                write!(w, "{id},{t}")?;
                for k in 0..self.dim() {
                    write!(w, ",{}", self.values[[p, j, k]])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Second-moment profile of an empirical L²-curve.
#[derive(Debug, Clone, Serialize)]
pub struct L2CurveStats {
    pub second_moments: Vec<f64>,
    pub norm: f64,
    pub modulus: Vec<f64>,
}

pub fn l2_curve_stats(ens: &PathEnsemble) -> L2CurveStats {
    let second_moments: Vec<f64> = ens.second_moments().iter().map(|e| e.value).collect();
    let norm = second_moments.iter().copied().fold(0.0, f64::max).sqrt();
    let modulus = ms_continuity_modulus(ens)
        .map(|m| m.entries.iter().map(|e| e.norm).collect())
        .unwrap_or_default();
    L2CurveStats {
        second_moments,
        norm,
        modulus,
    }
}

/// `‖r‖_T = max_j sqrt(E‖r_{t_j}‖²)`.
pub fn sup_l2_norm(ens: &PathEnsemble) -> Result<f64> {
    if ens.n_paths() == 0 {
        return Err(Error::Empty);
    }
    Ok(sup_l2_norm_estimate(ens).value)
}

/// The sup-L² norm with a delta-method SE taken at the maximizing grid point.
pub fn sup_l2_norm_estimate(ens: &PathEnsemble) -> Estimate {
    let moments = ens.second_moments();
    let best = moments
        .iter()
        .copied()
        .fold(Estimate::exact(0.0), |acc, e| {
            if e.value > acc.value {
                e
            } else {
                acc
            }
        });
    sqrt_estimate(best)
}

pub(crate) fn sqrt_estimate(e: Estimate) -> Estimate {
    let value = e.value.max(0.0).sqrt();
    let se = if value > 0.0 {
        e.se / (2.0 * value)
    } else {
        0.0
    };
    Estimate { value, se }
}

/// Sup-L² distance of two path-paired ensembles.
pub fn l2_distance(a: &PathEnsemble, b: &PathEnsemble) -> Result<f64> {
    a.check_same_shape(b)?;
    let (n_paths, n_points, dim) = a.values.dim();
    let mut worst: f64 = 0.0;
    for j in 0..n_points {
        let mut acc = 0.0;
        for p in 0..n_paths {
            for k in 0..dim {
                let d = a.values[[p, j, k]] - b.values[[p, j, k]];
                acc += d * d;
            }
        }
        worst = worst.max(acc / n_paths as f64);
    }
    Ok(worst.sqrt())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModulusEntry {
    pub t: f64,
    pub gap: f64,
    /// `sqrt(E‖r_{t_{j+1}} - r_{t_j}‖²)`
    pub norm: f64,
    /// The underlying mean-square increment estimate.
    pub second_moment: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityModulus {
    pub entries: Vec<ModulusEntry>,
}

impl ContinuityModulus {
    /// Largest increment norm with its delta-method SE.
    pub fn max(&self) -> Estimate {
        let best = self
            .entries
            .iter()
            .max_by(|a, b| a.norm.total_cmp(&b.norm))
            .expect("at least one interval");
        sqrt_estimate(best.second_moment)
    }
}

/// Mean-square increment norms over adjacent grid points.
pub fn ms_continuity_modulus(ens: &PathEnsemble) -> Result<ContinuityModulus> {
    if ens.n_points() < 2 {
        return Err(Error::Grid(
            "continuity modulus needs at least two grid points".into(),
        ));
    }
    let (n_paths, n_points, dim) = ens.values.dim();
    let pts = ens.grid.points();
    let mut samples = vec![0.0; n_paths];
    let entries = (0..n_points - 1)
        .map(|j| {
            for (p, s) in samples.iter_mut().enumerate() {
                *s = (0..dim)
                    .map(|k| (ens.values[[p, j + 1, k]] - ens.values[[p, j, k]]).powi(2))
                    .sum();
            }
            let second_moment = stats::mean(&samples);
            ModulusEntry {
                t: pts[j],
                gap: pts[j + 1] - pts[j],
                norm: second_moment.value.max(0.0).sqrt(),
                second_moment,
            }
        })
        .collect();
    Ok(ContinuityModulus { entries })
}

/// The left-limit process `Φ₋`: at each grid point the value minus any jump
/// occurring exactly at that point. Continuous ensembles come back unchanged.
/// The output is flagged predictable.
pub fn left_limit(ens: &PathEnsemble) -> Result<PathEnsemble> {
    let mut out = ens.clone();
    out.predictable = true;
    if ens.continuous || ens.predictable {
        return Ok(out);
    }
    let jumps = ens.jumps.as_ref().ok_or(Error::MissingJumpData)?;
    let dim = ens.dim();
    let pts = ens.grid.points();
    for (p, rec) in jumps.iter().enumerate() {
        if rec.is_empty() {
            continue;
        }
        // Merge walk over the sorted grid and jump times; every jump sitting
        // exactly on a grid point is removed from that point's value.
        let times = rec.times();
        let mut i = 0;
        for (j, &t) in pts.iter().enumerate() {
            while i < times.len() && times[i] < t {
                i += 1;
            }
            while i < times.len() && times[i] == t {
                let size = rec.size(i);
                for k in 0..dim {
                    out.values[[p, j, k]] -= size[k];
                }
                i += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_curve(n_paths: usize) -> PathEnsemble {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        PathEnsemble::deterministic_scalar(&grid, n_paths, |t| t).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::NAN]).is_err());
        assert!(TimeGrid::uniform(0.0, 3).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        let g = TimeGrid::uniform(2.0, 4).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.mesh(), 0.5);
    }

    #[test]
    fn grid_locate_augment_coarsen() {
        let g = TimeGrid::uniform(1.0, 8).unwrap();
        assert_eq!(g.locate(0.25), Some(2));
        assert_eq!(g.locate(0.3), None);
        let aug = g.augmented(&[0.3, 0.25]).unwrap();
        assert_eq!(aug.len(), 10);
        assert_eq!(aug.locate_exact(0.3), Some(3));
        assert!(g.augmented(&[1.5]).is_err());
        let c = g.coarsened(4).unwrap();
        assert_eq!(c.points(), &[0.0, 0.5, 1.0]);
        assert!(g.coarsened(3).is_err());
        assert_eq!(g.embed(&c).unwrap(), vec![0, 4, 8]);
    }

    #[test]
    fn norm_of_zero_and_linear_curves() {
        let x = linear_curve(3);
        assert_eq!(sup_l2_norm(&x.zeros_like()).unwrap(), 0.0);
        assert!((sup_l2_norm(&x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distances_of_constant_curves() {
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let one = PathEnsemble::deterministic_scalar(&grid, 4, |_| 1.0).unwrap();
        assert_eq!(l2_distance(&one, &one).unwrap(), 0.0);
        assert_eq!(l2_distance(&one, &one.scaled(-1.0)).unwrap(), 2.0);
        let other =
            PathEnsemble::deterministic_scalar(&TimeGrid::uniform(1.0, 4).unwrap(), 4, |_| 1.0)
                .unwrap();
        assert!(matches!(
            l2_distance(&one, &other),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn modulus_of_linear_curve() {
        let m = ms_continuity_modulus(&linear_curve(2)).unwrap();
        assert_eq!(m.entries.len(), 10);
        for e in &m.entries {
            assert!((e.norm - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn left_limit_requires_jump_data() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let raw = PathEnsemble::from_values(grid, Array3::zeros((1, 5, 1))).unwrap();
        assert!(matches!(left_limit(&raw), Err(Error::MissingJumpData)));
        let cont = raw.clone().with_continuous(true);
        let ll = left_limit(&cont).unwrap();
        assert_eq!(ll.values(), cont.values());
        assert!(ll.is_predictable());
    }

    #[test]
    fn left_limit_removes_on_grid_jump() {
        // Standard Poisson path with one jump at 0.5.
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let mut vals = Array3::zeros((1, 5, 1));
        for j in 2..5 {
            vals[[0, j, 0]] = 1.0;
        }
        let x = PathEnsemble::from_values(grid, vals)
            .unwrap()
            .with_jumps(vec![JumpRecord::scalar(vec![0.5], vec![1.0]).unwrap()])
            .unwrap();
        let ll = left_limit(&x).unwrap();
        assert_eq!(ll.scalar(0, 2), 0.0);
        assert_eq!(ll.scalar(0, 3), 1.0);
        assert_eq!(ll.scalar(0, 4), 1.0);
        let twice = left_limit(&ll).unwrap();
        assert_eq!(twice.values(), ll.values());
    }

    #[test]
    fn columnar_export_shape() {
        let x = linear_curve(2);
        let mut buf = Vec::new();
        x.write_columnar(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path,t,x0");
        assert_eq!(lines.len(), 1 + 2 * 11);
        assert_eq!(lines[11], "0,1,1");
    }
}
