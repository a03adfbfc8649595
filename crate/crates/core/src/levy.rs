//! Square-integrable Lévy drivers.
//!
//! A driver `X_t = M_t + b·t` is a Brownian motion, a compensated Poisson
//! process, or a compound Poisson process with a finite-variance jump law,
//! plus a drift. `M` is the martingale part and `⟨M,M⟩_t = c·t` with the
//! bracket rate `c` returned by [`LevySpec::bracket_rate`].
//!
//! Jump drivers are simulated from exact jump times (exponential
//! inter-arrivals), so every path carries a [`JumpRecord`] and grid values
//! are exact sums of recorded jumps plus the linear part.

use ndarray::Array3;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{PathEnsemble, TimeGrid};
use crate::rng::{driver_rng, PathRng};

/// Two sampled jump times closer than this are rejected and redrawn.
pub const MIN_JUMP_SEPARATION: f64 = 1e-15;

/// Jump-size law of a compound Poisson driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    /// `±magnitude` with probability ½ each.
    TwoPoint {
        magnitude: f64,
    },
    Exponential {
        rate: f64,
    },
    Normal {
        mean: f64,
        std_dev: f64,
    },
}

impl JumpLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            JumpLaw::TwoPoint { .. } => 0.0,
            JumpLaw::Exponential { rate } => 1.0 / rate,
            JumpLaw::Normal { mean, .. } => mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            JumpLaw::TwoPoint { magnitude } => magnitude * magnitude,
            JumpLaw::Exponential { rate } => 2.0 / (rate * rate),
            JumpLaw::Normal { mean, std_dev } => mean * mean + std_dev * std_dev,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            JumpLaw::TwoPoint { magnitude } if !magnitude.is_finite() => Err(Error::param(
                "jump_law.magnitude",
                format!("must be finite, got {magnitude}"),
            )),
            JumpLaw::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => Err(
                Error::param("jump_law.rate", format!("must be positive, got {rate}")),
            ),
            JumpLaw::Normal { mean, .. } if !mean.is_finite() => Err(Error::param(
                "jump_law.mean",
                format!("must be finite, got {mean}"),
            )),
            JumpLaw::Normal { std_dev, .. } if !(std_dev.is_finite() && std_dev >= 0.0) => {
                Err(Error::param(
                    "jump_law.std_dev",
                    format!("must be non-negative, got {std_dev}"),
                ))
            }
            _ => Ok(()),
        }
    }

    fn sample(&self, rng: &mut PathRng) -> f64 {
        match *self {
            JumpLaw::TwoPoint { magnitude } => {
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            JumpLaw::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
            JumpLaw::Normal { mean, std_dev } => {
                Normal::new(mean, std_dev).expect("validated").sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriverKind {
    Brownian {
        volatility: f64,
    },
    CompensatedPoisson {
        intensity: f64,
    },
    CompoundPoisson {
        intensity: f64,
        jump_law: JumpLaw,
        /// Subtract the compensator `λ·E[J]·t` from the path.
        compensated: bool,
    },
}

/// A Lévy driver `X_t = M_t + drift·t`.
///
/// For compensated kinds `drift` is exactly `b` in the decomposition. An
/// uncompensated compound Poisson path carries its jump mean as extra drift,
/// see [`LevySpec::decomposition_drift`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevySpec {
    pub kind: DriverKind,
    pub drift: f64,
}

impl LevySpec {
    pub fn brownian(volatility: f64) -> Self {
        LevySpec {
            kind: DriverKind::Brownian { volatility },
            drift: 0.0,
        }
    }

    pub fn compensated_poisson(intensity: f64) -> Self {
        LevySpec {
            kind: DriverKind::CompensatedPoisson { intensity },
            drift: 0.0,
        }
    }

    /// The counting process `N_t`, written as compensated Poisson plus drift `λ`.
    pub fn standard_poisson(intensity: f64) -> Self {
        LevySpec {
            kind: DriverKind::CompensatedPoisson { intensity },
            drift: intensity,
        }
    }

    pub fn compound_poisson(intensity: f64, jump_law: JumpLaw) -> Self {
        LevySpec {
            kind: DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                compensated: true,
            },
            drift: 0.0,
        }
    }

    pub fn with_drift(mut self, drift: f64) -> Self {
        self.drift = drift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.drift.is_finite() {
            return Err(Error::param(
                "drift",
                format!("must be finite, got {}", self.drift),
            ));
        }
        match self.kind {
            DriverKind::Brownian { volatility } => {
                if !(volatility.is_finite() && volatility >= 0.0) {
                    return Err(Error::param(
                        "volatility",
                        format!("must be non-negative, got {volatility}"),
                    ));
                }
            }
            DriverKind::CompensatedPoisson { intensity } => check_intensity(intensity)?,
            DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                ..
            } => {
                check_intensity(intensity)?;
                jump_law.validate()?;
            }
        }
        Ok(())
    }

    pub fn has_jumps(&self) -> bool {
        !matches!(self.kind, DriverKind::Brownian { .. })
    }

    /// `c` with `⟨M,M⟩_t = c·t`.
    pub fn bracket_rate(&self) -> f64 {
        match self.kind {
            DriverKind::Brownian { volatility } => volatility * volatility,
            DriverKind::CompensatedPoisson { intensity } => intensity,
            DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                ..
            } => intensity * jump_law.second_moment(),
        }
    }

    /// `b` in `X_t = M_t + b·t`.
    pub fn decomposition_drift(&self) -> f64 {
        match self.kind {
            DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                compensated: false,
            } => self.drift + intensity * jump_law.mean(),
            _ => self.drift,
        }
    }

    /// Coefficient of `t` in a path, apart from jumps and the Brownian part.
    pub fn path_drift(&self) -> f64 {
        match self.kind {
            DriverKind::Brownian { .. } => self.drift,
            DriverKind::CompensatedPoisson { intensity } => self.drift - intensity,
            DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                compensated,
            } => {
                if compensated {
                    self.drift - intensity * jump_law.mean()
                } else {
                    self.drift
                }
            }
        }
    }

    /// The driver of the martingale part `M` (same jumps, zero decomposition drift).
    pub fn martingale(&self) -> LevySpec {
        let kind = match self.kind {
            DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                ..
            } => DriverKind::CompoundPoisson {
                intensity,
                jump_law,
                compensated: true,
            },
            k => k,
        };
        LevySpec { kind, drift: 0.0 }
    }

    /// True when the path is a pure sum of jumps (no Brownian part, no linear term).
    pub fn is_pure_jump(&self) -> bool {
        self.has_jumps() && self.path_drift() == 0.0
    }

    fn intensity(&self) -> Option<f64> {
        match self.kind {
            DriverKind::Brownian { .. } => None,
            DriverKind::CompensatedPoisson { intensity }
            | DriverKind::CompoundPoisson { intensity, .. } => Some(intensity),
        }
    }

    fn sample_jump_size(&self, rng: &mut PathRng) -> f64 {
        match self.kind {
            DriverKind::CompoundPoisson { jump_law, .. } => jump_law.sample(rng),
            _ => 1.0,
        }
    }
}

fn check_intensity(intensity: f64) -> Result<()> {
    if intensity.is_finite() && intensity > 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            "intensity",
            format!("must be positive, got {intensity}"),
        ))
    }
}

/// Exact jump times in `(0, T]` with their sizes; sizes are stored row-major,
/// `dim` components per jump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpRecord {
    times: Vec<f64>,
    sizes: Vec<f64>,
    dim: usize,
}

impl JumpRecord {
    pub fn new(times: Vec<f64>, sizes: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || sizes.len() != times.len() * dim {
            return Err(Error::Consistency(format!(
                "{} jump times need {} size components, got {}",
                times.len(),
                times.len() * dim,
                sizes.len()
            )));
        }
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Consistency(
                "jump times must be positive and finite".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Consistency("jump times must be sorted".into()));
        }
        Ok(JumpRecord { times, sizes, dim })
    }

    pub fn scalar(times: Vec<f64>, sizes: Vec<f64>) -> Result<Self> {
        JumpRecord::new(times, sizes, 1)
    }

    pub fn empty(dim: usize) -> Self {
        JumpRecord {
            times: Vec::new(),
            sizes: Vec::new(),
            dim,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn size(&self, i: usize) -> &[f64] {
        &self.sizes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn scaled(&self, a: f64) -> JumpRecord {
        JumpRecord {
            times: self.times.clone(),
            sizes: self.sizes.iter().map(|s| a * s).collect(),
            dim: self.dim,
        }
    }

    /// Union of two records, sorted by time (stable: `self` first on ties).
    pub fn merged(&self, other: &JumpRecord) -> JumpRecord {
        assert_eq!(self.dim, other.dim);
        let (mut i, mut j) = (0, 0);
        let mut times = Vec::with_capacity(self.len() + other.len());
        let mut sizes = Vec::with_capacity(self.sizes.len() + other.sizes.len());
        while i < self.len() || j < other.len() {
            let take_self = j >= other.len() || (i < self.len() && self.times[i] <= other.times[j]);
            if take_self {
                times.push(self.times[i]);
                sizes.extend_from_slice(self.size(i));
                i += 1;
            } else {
                times.push(other.times[j]);
                sizes.extend_from_slice(other.size(j));
                j += 1;
            }
        }
        JumpRecord {
            times,
            sizes,
            dim: self.dim,
        }
    }

    /// Jumps with time `<= t`.
    pub fn truncated(&self, t: f64) -> JumpRecord {
        let n = self.times.partition_point(|&s| s <= t);
        JumpRecord {
            times: self.times[..n].to_vec(),
            sizes: self.sizes[..n * self.dim].to_vec(),
            dim: self.dim,
        }
    }

    /// Sum of scalar jump sizes with time `<= t`.
    pub fn cumulative(&self, t: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let n = self.times.partition_point(|&s| s <= t);
        self.sizes[..n].iter().sum()
    }
}

/// Draws the jump record of one path on `(0, horizon]`.
pub fn sample_jumps(spec: &LevySpec, horizon: f64, rng: &mut PathRng) -> JumpRecord {
    let Some(intensity) = spec.intensity() else {
        return JumpRecord::empty(1);
    };
    let wait = Exp::new(intensity).expect("validated intensity");
    let mut times = Vec::new();
    let mut sizes = Vec::new();
    let mut t = 0.0;
    loop {
        let next = t + wait.sample(rng);
        if next > horizon {
            break;
        }
        if next - t < MIN_JUMP_SEPARATION {
            // Coincident jumps have probability zero; redraw the gap.
            continue;
        }
        t = next;
        times.push(t);
        sizes.push(spec.sample_jump_size(rng));
    }
    JumpRecord {
        times,
        sizes,
        dim: 1,
    }
}

/// Grid values of a jump driver path: `path_drift·t + Σ_{τ ≤ t} ΔX_τ`.
pub fn jump_path_values(spec: &LevySpec, record: &JumpRecord, grid: &TimeGrid) -> Vec<f64> {
    let drift = spec.path_drift();
    let times = record.times();
    let mut i = 0;
    let mut acc = 0.0;
    grid.points()
        .iter()
        .map(|&t| {
            while i < times.len() && times[i] <= t {
                acc += record.sizes[i];
                i += 1;
            }
            drift * t + acc
        })
        .collect()
}

fn fill_path(spec: &LevySpec, grid: &TimeGrid, rng: &mut PathRng, out: &mut [f64]) -> JumpRecord {
    match spec.kind {
        DriverKind::Brownian { volatility } => {
            let pts = grid.points();
            let mut w = 0.0;
            out[0] = 0.0;
            for j in 1..pts.len() {
                let z: f64 = StandardNormal.sample(rng);
                w += (pts[j] - pts[j - 1]).sqrt() * z;
                out[j] = spec.drift * pts[j] + volatility * w;
            }
            JumpRecord::empty(1)
        }
        _ => {
            let record = sample_jumps(spec, grid.horizon(), rng);
            out.copy_from_slice(&jump_path_values(spec, &record, grid));
            record
        }
    }
}

/// Simulates `n_paths` paths of `spec` on `grid`. Path `p` uses the random
/// stream `(seed, p)`, so output does not depend on the thread count.
pub fn simulate_paths(
    spec: &LevySpec,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    simulate_driver(spec, grid, 0, 0, n_paths, seed)
}

/// Paths `first_path .. first_path + n_paths` of driver number `driver`.
/// Any split of a run into path ranges reproduces the monolithic run.
pub fn simulate_driver(
    spec: &LevySpec,
    grid: &TimeGrid,
    driver: usize,
    first_path: u64,
    n_paths: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    spec.validate()?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    let n_points = grid.len();
    let mut values = vec![0.0; n_paths * n_points];
    let records: Vec<JumpRecord> = values
        .par_chunks_mut(n_points)
        .enumerate()
        .map(|(p, out)| {
            let mut rng = driver_rng(seed, driver, first_path + p as u64);
            fill_path(spec, grid, &mut rng, out)
        })
        .collect();
    let values = Array3::from_shape_vec((n_paths, n_points, 1), values).expect("shape");
    let ens = PathEnsemble::from_values(grid.clone(), values)?
        .with_adapted(true)
        .with_seed(seed, first_path)
        .with_origin(*spec);
    if spec.has_jumps() {
        ens.with_jumps(records)
    } else {
        Ok(ens.with_continuous(true))
    }
}

/// `M_t = X_t - b·t` path by path; jump records are kept.
pub fn martingale_part(spec: &LevySpec, ens: &PathEnsemble) -> Result<PathEnsemble> {
    spec.validate()?;
    match ens.origin() {
        Some(o) if o == spec => {}
        Some(o) => {
            return Err(Error::Consistency(format!(
                "ensemble was generated from {o:?}, not {spec:?}"
            )))
        }
        None => return Err(Error::Consistency("ensemble has no driver origin".into())),
    }
    if ens.dim() != 1 {
        return Err(Error::Consistency("driver ensembles are scalar".into()));
    }
    let b = spec.decomposition_drift();
    let mut out = ens.clone().with_origin(spec.martingale());
    if b != 0.0 {
        let pts = ens.grid().points().to_vec();
        let n_points = pts.len();
        let vals = out.values_mut();
        for p in 0..ens.n_paths() {
            for (j, t) in pts.iter().enumerate().take(n_points) {
                vals[[p, j, 0]] -= b * t;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn two_point() -> JumpLaw {
        JumpLaw::TwoPoint { magnitude: 1.0 }
    }

    #[test]
    fn bracket_rates() {
        assert_eq!(LevySpec::brownian(1.0).bracket_rate(), 1.0);
        assert_eq!(LevySpec::compensated_poisson(2.0).bracket_rate(), 2.0);
        assert_eq!(
            LevySpec::compound_poisson(3.0, two_point()).bracket_rate(),
            3.0
        );
        let exp = LevySpec::compound_poisson(2.0, JumpLaw::Exponential { rate: 2.0 });
        assert_eq!(exp.bracket_rate(), 1.0);
        let norm = LevySpec::compound_poisson(
            1.0,
            JumpLaw::Normal {
                mean: 1.0,
                std_dev: 2.0,
            },
        );
        assert_eq!(norm.bracket_rate(), 5.0);
    }

    #[test]
    fn invalid_parameters_name_the_field() {
        let err = LevySpec::compensated_poisson(-1.0).validate().unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "intensity",
                ..
            }
        ));
        let err = LevySpec::brownian(-0.5).validate().unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "volatility",
                ..
            }
        ));
        let err = LevySpec::compound_poisson(1.0, JumpLaw::Exponential { rate: 0.0 })
            .validate()
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                field: "jump_law.rate",
                ..
            }
        ));
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        assert!(simulate_paths(&LevySpec::brownian(1.0), &grid, 0, 1).is_err());
    }

    #[test]
    fn degenerate_brownian_is_zero() {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let ens = simulate_paths(&LevySpec::brownian(0.0), &grid, 4, 9).unwrap();
        assert!(ens.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn standard_poisson_decomposition() {
        let spec = LevySpec::standard_poisson(1.0);
        assert_eq!(spec.path_drift(), 0.0);
        assert_eq!(spec.decomposition_drift(), 1.0);
        assert!(spec.is_pure_jump());
        // Path value 3 at t = 1 gives M_1 = 2.
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let rec = JumpRecord::scalar(vec![0.2, 0.4, 0.9], vec![1.0; 3]).unwrap();
        let vals = Array3::from_shape_vec((1, 2, 1), jump_path_values(&spec, &rec, &grid)).unwrap();
        let x = PathEnsemble::from_values(grid, vals)
            .unwrap()
            .with_adapted(true)
            .with_jumps(vec![rec])
            .unwrap()
            .with_origin(spec);
        assert_eq!(x.scalar(0, 1), 3.0);
        let m = martingale_part(&spec, &x).unwrap();
        assert_eq!(m.scalar(0, 1), 2.0);
        assert_eq!(m.jumps(), x.jumps());
    }

    #[test]
    fn martingale_part_rejects_foreign_ensemble() {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let x = simulate_paths(&LevySpec::brownian(1.0), &grid, 2, 1).unwrap();
        assert!(matches!(
            martingale_part(&LevySpec::brownian(2.0), &x),
            Err(Error::Consistency(_))
        ));
        let zero_drift = martingale_part(&LevySpec::brownian(1.0), &x).unwrap();
        assert_eq!(zero_drift.values(), x.values());
    }

    #[test]
    fn jump_paths_reconstruct_from_records() {
        let grid = TimeGrid::uniform(2.0, 50).unwrap();
        for spec in [
            LevySpec::compensated_poisson(3.0),
            LevySpec::compound_poisson(2.0, JumpLaw::Exponential { rate: 1.5 }).with_drift(0.3),
            LevySpec::compound_poisson(
                4.0,
                JumpLaw::Normal {
                    mean: -0.5,
                    std_dev: 1.0,
                },
            ),
        ] {
            let ens = simulate_paths(&spec, &grid, 20, 5).unwrap();
            let jumps = ens.jumps().unwrap();
            for (p, rec) in jumps.iter().enumerate() {
                assert!(rec.times().windows(2).all(|w| w[0] < w[1]));
                assert!(rec.times().iter().all(|&t| t <= 2.0));
                for (j, &t) in grid.points().iter().enumerate() {
                    let expected = spec.path_drift() * t + rec.cumulative(t);
                    assert!((ens.scalar(p, j) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn simulation_is_deterministic_and_chunkable() {
        let grid = TimeGrid::uniform(1.0, 20).unwrap();
        let spec = LevySpec::compound_poisson(3.0, two_point());
        let a = simulate_paths(&spec, &grid, 10, 77).unwrap();
        let b = simulate_paths(&spec, &grid, 10, 77).unwrap();
        let c = simulate_paths(&spec, &grid, 10, 78).unwrap();
        assert_eq!(a.values(), b.values());
        assert_ne!(a.values(), c.values());
        let tail = simulate_driver(&spec, &grid, 0, 6, 4, 77).unwrap();
        for p in 0..4 {
            assert_eq!(tail.path(p), a.path(p + 6));
        }
    }

    #[test]
    fn compensated_poisson_terminal_moments() {
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let ens = simulate_paths(&LevySpec::compensated_poisson(1.0), &grid, 100_000, 11).unwrap();
        let x1: Vec<f64> = (0..ens.n_paths()).map(|p| ens.scalar(p, 100)).collect();
        assert!(stats::mean(&x1).within(0.0, 3.0, 0.0));
        assert!(stats::variance(&x1).within(1.0, 3.0, 0.0));
    }

    #[test]
    fn brownian_with_drift_means() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let spec = LevySpec::brownian(1.0).with_drift(2.0);
        let x = simulate_paths(&spec, &grid, 100_000, 3).unwrap();
        let x1: Vec<f64> = (0..x.n_paths()).map(|p| x.scalar(p, 10)).collect();
        assert!(stats::mean(&x1).within(2.0, 3.0, 0.0));

        let spec = LevySpec::brownian(1.0).with_drift(5.0);
        let x = simulate_paths(&spec, &grid, 100_000, 4).unwrap();
        let m = martingale_part(&spec, &x).unwrap();
        let m1: Vec<f64> = (0..m.n_paths()).map(|p| m.scalar(p, 10)).collect();
        assert!(stats::mean(&m1).within(0.0, 3.0, 0.0));
    }
}
