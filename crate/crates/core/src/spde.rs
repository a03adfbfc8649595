//! Mild solutions of Lévy-driven SPDEs with a spectral generator.
//!
//! The equation is
//!
//! ```text
//! dr_t = (A r_t + α(t, r_t)) dt + Σ_i σ_i(t, r_{t-}) dX^i_t,   r_0 = h₀
//! ```
//!
//! with `A` diagonal in a truncated basis of `H ≅ ℝ^dim`, acting as `-μ_k` on
//! coordinate `k`, so `S_t = diag(e^{-μ_k t})`. The mild form
//!
//! ```text
//! r_t = S_t h₀ + ∫₀ᵗ S_{t-s} α(s, r_s) ds + Σ_i ∫₀ᵗ S_{t-s} σ_i(s, r_{s-}) dX^i_s
//! ```
//!
//! is solved by Picard iteration on empirical L²-curves, starting from
//! `r⁰_t = S_t h₀`. Integrals use left endpoints with exact semigroup factors.
//! Drivers are simulated once per path stream and reused by every iterate.
//!
//! Large runs are processed in path chunks. The sup-L² distance between
//! iterates needs every path, so chunks first iterate on their own while the
//! per-time squared distances are pooled; the stopping iterate is then fixed
//! globally and only chunks whose last iterate differs are recomputed.

use std::fmt;
use std::sync::Arc;

use ndarray::Array3;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ms_continuity_modulus, ContinuityModulus, PathEnsemble, TimeGrid};
use crate::integral::on_grid_jumps;
use crate::levy::{simulate_driver, JumpRecord, LevySpec};
use crate::rng::path_rng;
use crate::stats::Estimate;
use crate::tolerances;

/// Floats per chunk iterate when the chunk size is chosen automatically.
const AUTO_CHUNK_FLOATS: usize = 1 << 25;

/// Generator `A = diag(-μ_k)` with `μ_k >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralOperator {
    eigenvalues: Vec<f64>,
}

impl SpectralOperator {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::param("eigenvalues", "need at least one coordinate"));
        }
        if let Some(mu) = eigenvalues.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::param(
                "eigenvalues",
                format!("must be finite and non-negative, got {mu}"),
            ));
        }
        Ok(SpectralOperator { eigenvalues })
    }

    /// Dirichlet Laplacian on `(0, π)`: `μ_k = k²`.
    pub fn heat(dim: usize) -> Result<Self> {
        SpectralOperator::new((1..=dim).map(|k| (k * k) as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `ω = -min_k μ_k`, so that `‖S_t‖ = e^{ωt}`.
    pub fn growth_bound(&self) -> f64 {
        -self
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Diagonal of `S_t`.
    pub fn factors(&self, t: f64) -> Vec<f64> {
        self.eigenvalues.iter().map(|mu| (-mu * t).exp()).collect()
    }

    pub fn apply(&self, t: f64, state: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "semigroup time must be non-negative, got {t}"
            )));
        }
        if state.len() != self.dim() {
            return Err(Error::Consistency(format!(
                "state has {} coordinates, operator {}",
                state.len(),
                self.dim()
            )));
        }
        Ok(self
            .factors(t)
            .iter()
            .zip(state)
            .map(|(f, x)| f * x)
            .collect())
    }
}

pub fn semigroup_apply(op: &SpectralOperator, t: f64, state: &[f64]) -> Result<Vec<f64>> {
    op.apply(t, state)
}

pub fn pseudo_contractivity_bound(op: &SpectralOperator) -> f64 {
    op.growth_bound()
}

type CoefficientFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// A coefficient map `(t, state) -> state` with its declared Lipschitz
/// constant. Componentwise maps with scalar constant `L` are `L`-Lipschitz in
/// the Euclidean norm.
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    Constant(Vec<f64>),
    /// `a·r`
    Linear(f64),
    /// `L·sin(r_k)` per coordinate
    Sine(f64),
    /// `L·cos(r_k)` per coordinate
    Cosine(f64),
    Custom {
        label: String,
        lipschitz: f64,
        f: Arc<CoefficientFn>,
    },
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => write!(f, "Zero"),
            Coefficient::Constant(c) => write!(f, "Constant({c:?})"),
            Coefficient::Linear(a) => write!(f, "Linear({a})"),
            Coefficient::Sine(l) => write!(f, "Sine({l})"),
            Coefficient::Cosine(l) => write!(f, "Cosine({l})"),
            Coefficient::Custom {
                label, lipschitz, ..
            } => {
                write!(f, "Custom({label}, L={lipschitz})")
            }
        }
    }
}

impl Coefficient {
    pub fn custom<F>(label: impl Into<String>, lipschitz: f64, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Coefficient::Custom {
            label: label.into(),
            lipschitz,
            f: Arc::new(f),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Coefficient::Zero | Coefficient::Constant(_) => 0.0,
            Coefficient::Linear(a) => a.abs(),
            Coefficient::Sine(l) | Coefficient::Cosine(l) => l.abs(),
            Coefficient::Custom { lipschitz, .. } => *lipschitz,
        }
    }

    /// True when the map ignores the state.
    pub fn is_state_free(&self) -> bool {
        matches!(self, Coefficient::Zero | Coefficient::Constant(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Coefficient::Zero)
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.add_scaled(t, x, 1.0, out);
    }

    /// `out += scale · f(t, x)`
    #[inline]
    fn add_scaled(&self, t: f64, x: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Coefficient::Zero => {}
            Coefficient::Constant(c) => {
                for (o, ci) in out.iter_mut().zip(c) {
                    *o += scale * ci;
                }
            }
            Coefficient::Linear(a) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += scale * a * xi;
                }
            }
            Coefficient::Sine(l) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += scale * l * xi.sin();
                }
            }
            Coefficient::Cosine(l) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o += scale * l * xi.cos();
                }
            }
            Coefficient::Custom { f, .. } => {
                let mut tmp = vec![0.0; out.len()];
                f(t, x, &mut tmp);
                for (o, v) in out.iter_mut().zip(tmp) {
                    *o += scale * v;
                }
            }
        }
    }

    /// Samples random pairs and returns the largest `‖f(x)-f(y)‖ / ‖x-y‖`.
    /// Fails when some pair exceeds the declared constant by more than the
    /// Lipschitz tolerance.
    pub fn check_lipschitz(&self, dim: usize, samples: usize, seed: u64) -> Result<f64> {
        if let Coefficient::Constant(c) = self {
            if c.len() != dim {
                return Err(Error::param(
                    "coefficient",
                    format!("constant has {} coordinates, problem has {dim}", c.len()),
                ));
            }
        }
        let declared = self.lipschitz();
        if !(declared.is_finite() && declared >= 0.0) {
            return Err(Error::param(
                "lipschitz",
                format!("must be finite, got {declared}"),
            ));
        }
        let mut rng = path_rng(seed, u64::MAX);
        let mut worst: f64 = 0.0;
        let (mut x, mut y) = (vec![0.0; dim], vec![0.0; dim]);
        let (mut fx, mut fy) = (vec![0.0; dim], vec![0.0; dim]);
        for _ in 0..samples {
            let t = rng.random_range(0.0..10.0);
            let scale = 10f64.powf(rng.random_range(-3.0..1.0));
            for k in 0..dim {
                x[k] = rng.random_range(-10.0..10.0);
                y[k] = x[k] + scale * rng.random_range(-1.0..1.0);
            }
            self.eval(t, &x, &mut fx);
            self.eval(t, &y, &mut fy);
            let dx = gap_norm(&x, &y);
            let df = gap_norm(&fx, &fy);
            // Rounding in evaluating f itself is not a Lipschitz violation.
            let zero = vec![0.0; dim];
            let rounding = 8.0 * f64::EPSILON * (gap_norm(&fx, &zero) + gap_norm(&fy, &zero));
            if df > declared * dx + tolerances::LIPSCHITZ + rounding {
                return Err(Error::param(
                    "lipschitz",
                    format!("declared {declared} but observed ratio {}", df / dx),
                ));
            }
            if dx > 0.0 {
                worst = worst.max(df / dx);
            }
        }
        Ok(worst)
    }
}

/// `‖a - b‖` without overflowing for huge entries.
fn gap_norm(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale
        * a.iter()
            .zip(b)
            .map(|(x, y)| ((x - y) / scale).powi(2))
            .sum::<f64>()
            .sqrt()
}

/// Problem data of the mild equation.
#[derive(Debug, Clone)]
pub struct SpdeProblem {
    pub operator: SpectralOperator,
    pub h0: Vec<f64>,
    pub alpha: Coefficient,
    pub sigmas: Vec<Coefficient>,
    pub drivers: Vec<LevySpec>,
}

impl SpdeProblem {
    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if self.h0.len() != dim {
            return Err(Error::param(
                "h0",
                format!("has {} coordinates, operator has {dim}", self.h0.len()),
            ));
        }
        if self.h0.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("h0", "must be finite"));
        }
        if self.sigmas.len() != self.drivers.len() {
            return Err(Error::param(
                "sigmas",
                format!(
                    "{} coefficients for {} drivers",
                    self.sigmas.len(),
                    self.drivers.len()
                ),
            ));
        }
        for d in &self.drivers {
            d.validate()?;
        }
        self.alpha.check_lipschitz(dim, 256, 1)?;
        for (i, s) in self.sigmas.iter().enumerate() {
            s.check_lipschitz(dim, 256, 2 + i as u64)?;
        }
        Ok(())
    }

    /// `α ≡ 0` and every `σ_i` constant.
    pub fn is_linear_additive(&self) -> bool {
        self.alpha.is_zero() && self.sigmas.iter().all(Coefficient::is_state_free)
    }

    pub fn total_lipschitz(&self) -> f64 {
        self.alpha.lipschitz() + self.sigmas.iter().map(Coefficient::lipschitz).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Paths per chunk; `None` picks a size bounded by memory.
    pub chunk_paths: Option<usize>,
    /// Keep every `record_stride`-th grid point (the last point is always kept).
    pub record_stride: usize,
    /// Number of consecutive time blocks; each block restarts the iteration
    /// from the previous block's end state.
    pub blocks: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-4,
            max_iter: 50,
            chunk_paths: None,
            record_stride: 1,
            blocks: 1,
        }
    }
}

impl PicardOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::param(
                "tol",
                format!("must be positive, got {}", self.tol),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be at least 1"));
        }
        if self.blocks == 0 {
            return Err(Error::param("blocks", "must be at least 1"));
        }
        if self.chunk_paths == Some(0) {
            return Err(Error::param("chunk_paths", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub start: f64,
    pub end: f64,
    pub distances: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Sup-L² distances `d_m = ‖r^{m+1} - r^m‖_T` of the Picard iterates.
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    /// Per iteration, the largest distance over time blocks.
    pub distances: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub blocks: Vec<BlockReport>,
}

impl PicardReport {
    /// Consecutive ratios `d_{m+1} / d_m` (skipping zero denominators).
    pub fn ratios(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// Largest ratio `d_{m+1} / d_m` for `m >= from`.
    pub fn contraction_ratio(&self, from: usize) -> Option<f64> {
        self.distances
            .iter()
            .skip(from)
            .collect::<Vec<_>>()
            .windows(2)
            .filter(|w| *w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .reduce(f64::max)
    }
}

/// Driver increments of one chunk and the jumps sitting on grid points.
struct ChunkDrivers {
    /// Per driver, `n_paths × n_intervals` increments.
    increments: Vec<Vec<f64>>,
    /// Per path, `(grid index, driver, size)` of on-grid jumps, sorted by index.
    on_grid: Vec<Vec<(usize, usize, f64)>>,
    any_jumps: bool,
}

impl ChunkDrivers {
    fn simulate(
        problem: &SpdeProblem,
        grid: &TimeGrid,
        first: u64,
        n: usize,
        seed: u64,
    ) -> Result<Self> {
        let n_int = grid.n_intervals();
        let mut increments = Vec::with_capacity(problem.drivers.len());
        let mut on_grid = vec![Vec::new(); n];
        let mut any_jumps = false;
        for (d, spec) in problem.drivers.iter().enumerate() {
            let x = simulate_driver(spec, grid, d, first, n, seed)?;
            let mut inc = vec![0.0; n * n_int];
            for p in 0..n {
                for j in 0..n_int {
                    inc[p * n_int + j] = x.scalar(p, j + 1) - x.scalar(p, j);
                }
            }
            increments.push(inc);
            if let Some(records) = x.jumps() {
                for (p, rec) in records.iter().enumerate() {
                    for (j, i) in on_grid_jumps(grid, rec) {
                        on_grid[p].push((j, d, rec.size(i)[0]));
                        any_jumps = true;
                    }
                }
            }
        }
        for v in on_grid.iter_mut() {
            v.sort_by_key(|e| e.0);
        }
        Ok(ChunkDrivers {
            increments,
            on_grid,
            any_jumps,
        })
    }

    fn from_ensembles(problem: &SpdeProblem, drivers: &[PathEnsemble]) -> Result<Self> {
        if drivers.len() != problem.drivers.len() {
            return Err(Error::Consistency(format!(
                "{} driver ensembles for {} drivers",
                drivers.len(),
                problem.drivers.len()
            )));
        }
        let grid = drivers[0].grid();
        let n = drivers[0].n_paths();
        let n_int = grid.n_intervals();
        let mut increments = Vec::new();
        let mut on_grid = vec![Vec::new(); n];
        let mut any_jumps = false;
        for (d, x) in drivers.iter().enumerate() {
            if x.grid() != grid || x.n_paths() != n || x.dim() != 1 {
                return Err(Error::Consistency(
                    "driver ensembles must be scalar and paired".into(),
                ));
            }
            if !x.is_adapted() {
                return Err(Error::NotAdapted);
            }
            let mut inc = vec![0.0; n * n_int];
            for p in 0..n {
                for j in 0..n_int {
                    inc[p * n_int + j] = x.scalar(p, j + 1) - x.scalar(p, j);
                }
            }
            increments.push(inc);
            if !x.is_continuous() {
                let records = x.jumps().ok_or(Error::MissingJumpData)?;
                for (p, rec) in records.iter().enumerate() {
                    for (j, i) in on_grid_jumps(grid, rec) {
                        on_grid[p].push((j, d, rec.size(i)[0]));
                        any_jumps = true;
                    }
                }
            }
        }
        for v in on_grid.iter_mut() {
            v.sort_by_key(|e| e.0);
        }
        Ok(ChunkDrivers {
            increments,
            on_grid,
            any_jumps,
        })
    }

    fn n_paths(&self) -> usize {
        self.on_grid.len()
    }
}

/// Grid-only quantities shared by every path of a time block.
struct BlockGeometry {
    start: usize,
    end: usize,
    /// `e^{-μ_k Δt_j}` for `j` in `start..end`, row-major.
    decay: Vec<f64>,
    /// `e^{-μ_k (t_j - t_start)}` for `j` in `start..=end`, row-major.
    semigroup: Vec<f64>,
}

impl BlockGeometry {
    fn new(op: &SpectralOperator, grid: &TimeGrid, start: usize, end: usize) -> Self {
        let pts = grid.points();
        let dim = op.dim();
        let mut decay = Vec::with_capacity((end - start) * dim);
        for j in start..end {
            decay.extend(op.factors(pts[j + 1] - pts[j]));
        }
        let mut semigroup = Vec::with_capacity((end - start + 1) * dim);
        for j in start..=end {
            semigroup.extend(op.factors(pts[j] - pts[start]));
        }
        debug_assert_eq!(decay.len(), (end - start) * dim);
        BlockGeometry {
            start,
            end,
            decay,
            semigroup,
        }
    }

    fn len(&self) -> usize {
        self.end - self.start + 1
    }
}

/// One path's iterate on a block: values plus the sparse corrections that
/// turn a value into its left limit at grid points hit by a driver jump.
#[derive(Clone)]
struct PathIterate {
    values: Vec<f64>,
    corrections: Vec<(usize, Vec<f64>)>,
}

impl PathIterate {
    fn initial(geom: &BlockGeometry, init: &[f64], init_correction: Option<&[f64]>) -> Self {
        let dim = init.len();
        let mut values = vec![0.0; geom.len() * dim];
        for l in 0..geom.len() {
            for k in 0..dim {
                values[l * dim + k] = geom.semigroup[l * dim + k] * init[k];
            }
        }
        let corrections = init_correction
            .filter(|c| c.iter().any(|v| *v != 0.0))
            .map(|c| vec![(0, c.to_vec())])
            .unwrap_or_default();
        PathIterate {
            values,
            corrections,
        }
    }
}

/// `r^{m+1} = Φ(r^m)` for one path on one block.
#[allow(clippy::too_many_arguments)]
fn picard_step_path(
    problem: &SpdeProblem,
    grid: &TimeGrid,
    geom: &BlockGeometry,
    drivers: &ChunkDrivers,
    p: usize,
    init: &[f64],
    prev: &PathIterate,
    next: &mut PathIterate,
) {
    let dim = problem.dim();
    let pts = grid.points();
    let n_int = grid.n_intervals();
    let on_grid = &drivers.on_grid[p];
    let mut acc = vec![0.0; dim];
    let mut f = vec![0.0; dim];
    let mut pred = vec![0.0; dim];
    let mut jump_part = vec![0.0; dim];
    let mut corr_iter = prev.corrections.iter().peekable();
    next.corrections.clear();
    next.values[..dim].copy_from_slice(init);
    if let Some((0, c)) = prev.corrections.first() {
        next.corrections.push((0, c.clone()));
    }
    let mut jump_cursor = on_grid.partition_point(|e| e.0 <= geom.start);

    for l in 0..geom.len() - 1 {
        let j = geom.start + l;
        let t = pts[j];
        let dt = pts[j + 1] - t;
        let r = &prev.values[l * dim..(l + 1) * dim];
        pred.copy_from_slice(r);
        while let Some((idx, c)) = corr_iter.peek() {
            if *idx < l {
                corr_iter.next();
            } else {
                if *idx == l {
                    for k in 0..dim {
                        pred[k] -= c[k];
                    }
                }
                break;
            }
        }

        f.iter_mut().for_each(|v| *v = 0.0);
        problem.alpha.add_scaled(t, r, dt, &mut f);
        for (d, sigma) in problem.sigmas.iter().enumerate() {
            let dx = drivers.increments[d][p * n_int + j];
            if dx != 0.0 {
                sigma.add_scaled(t, &pred, dx, &mut f);
            }
        }

        let decay = &geom.decay[l * dim..(l + 1) * dim];
        for k in 0..dim {
            acc[k] = decay[k] * (acc[k] + f[k]);
        }
        let s = &geom.semigroup[(l + 1) * dim..(l + 2) * dim];
        let out = &mut next.values[(l + 1) * dim..(l + 2) * dim];
        for k in 0..dim {
            out[k] = s[k] * init[k] + acc[k];
        }

        if drivers.any_jumps {
            // Part of this step's increment due to driver jumps exactly at t_{j+1}.
            let mut hit = false;
            jump_part.iter_mut().for_each(|v| *v = 0.0);
            while jump_cursor < on_grid.len() && on_grid[jump_cursor].0 <= j + 1 {
                let (idx, d, size) = on_grid[jump_cursor];
                if idx == j + 1 {
                    problem.sigmas[d].add_scaled(t, &pred, size, &mut jump_part);
                    hit = true;
                }
                jump_cursor += 1;
            }
            if hit {
                let c: Vec<f64> = (0..dim).map(|k| decay[k] * jump_part[k]).collect();
                next.corrections.push((l + 1, c));
            }
        }
    }
}

/// Squared distance per block grid point, summed over the dims of one path.
fn squared_gaps(a: &[f64], b: &[f64], dim: usize, out: &mut [f64]) {
    for (l, o) in out.iter_mut().enumerate() {
        *o = (0..dim)
            .map(|k| (a[l * dim + k] - b[l * dim + k]).powi(2))
            .sum();
    }
}

struct ChunkOutcome {
    /// `sums[m][l]`: Σ over chunk paths of ‖r^{m+1} - r^m‖² at block point `l`.
    sums: Vec<Vec<f64>>,
    iterates: Vec<PathIterate>,
    iterations: usize,
    fixpoint: Option<usize>,
}

enum Stop {
    /// Stop once the chunk-local sup-L² distance drops below `tol` over `n_total` paths.
    Local { tol: f64, n_total: usize },
    /// Run exactly this many updates (or until an exact fixed point).
    Count(usize),
}

fn run_chunk(
    problem: &SpdeProblem,
    grid: &TimeGrid,
    geom: &BlockGeometry,
    drivers: &ChunkDrivers,
    inits: &[Vec<f64>],
    init_corrections: &[Option<Vec<f64>>],
    stop: Stop,
    max_iter: usize,
) -> Result<ChunkOutcome> {
    let n = drivers.n_paths();
    let dim = problem.dim();
    let len = geom.len();
    let mut current: Vec<PathIterate> = (0..n)
        .map(|p| PathIterate::initial(geom, &inits[p], init_corrections[p].as_deref()))
        .collect();
    let mut next = current.clone();
    let mut sums = Vec::new();
    let mut fixpoint = None;
    let limit = match stop {
        Stop::Local { .. } => max_iter,
        Stop::Count(c) => c,
    };
    let mut iterations = 0;
    while iterations < limit {
        let per_path: Vec<Vec<f64>> = next
            .par_iter_mut()
            .zip(current.par_iter())
            .enumerate()
            .map(|(p, (nx, cur))| {
                picard_step_path(problem, grid, geom, drivers, p, &inits[p], cur, nx);
                let mut gaps = vec![0.0; len];
                squared_gaps(&nx.values, &cur.values, dim, &mut gaps);
                gaps
            })
            .collect();
        if next
            .iter()
            .any(|it| it.values.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Numeric(format!(
                "non-finite iterate at Picard step {}",
                iterations + 1
            )));
        }
        let mut total = vec![0.0; len];
        for gaps in &per_path {
            for (t, g) in total.iter_mut().zip(gaps) {
                *t += g;
            }
        }
        std::mem::swap(&mut current, &mut next);
        let zero = total.iter().all(|&s| s == 0.0);
        let local_max = total.iter().copied().fold(0.0, f64::max);
        sums.push(total);
        iterations += 1;
        if zero {
            fixpoint = Some(iterations - 1);
            break;
        }
        if let Stop::Local { tol, n_total } = stop {
            if (local_max / n_total as f64).sqrt() < tol {
                break;
            }
        }
    }
    Ok(ChunkOutcome {
        sums,
        iterates: current,
        iterations,
        fixpoint,
    })
}

fn block_bounds(n_int: usize, blocks: usize) -> Result<Vec<(usize, usize)>> {
    if blocks > n_int {
        return Err(Error::param(
            "blocks",
            format!("{blocks} blocks on a grid with {n_int} intervals"),
        ));
    }
    Ok((0..blocks)
        .map(|b| (b * n_int / blocks, (b + 1) * n_int / blocks))
        .collect())
}

fn recorded_indices(n_points: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_points).step_by(stride).collect();
    if *idx.last().unwrap() != n_points - 1 {
        idx.push(n_points - 1);
    }
    idx
}

/// Where chunk drivers come from.
enum DriverSource<'a> {
    Simulate { seed: u64 },
    Given(&'a [PathEnsemble]),
}

fn solve(
    problem: &SpdeProblem,
    grid: &TimeGrid,
    n_paths: usize,
    source: DriverSource<'_>,
    opts: &PicardOptions,
) -> Result<(PathEnsemble, PicardReport)> {
    problem.validate()?;
    opts.validate()?;
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be at least 1"));
    }
    let dim = problem.dim();
    let n_points = grid.len();
    let chunk = match (&source, opts.chunk_paths) {
        (DriverSource::Given(_), _) => n_paths,
        (_, Some(c)) => c.min(n_paths),
        (_, None) => (AUTO_CHUNK_FLOATS / (n_points * dim)).clamp(1, n_paths),
    };
    let chunks: Vec<(usize, usize)> = (0..n_paths)
        .step_by(chunk)
        .map(|first| (first, chunk.min(n_paths - first)))
        .collect();
    let load = |first: usize, count: usize| -> Result<ChunkDrivers> {
        match &source {
            DriverSource::Simulate { seed } => {
                ChunkDrivers::simulate(problem, grid, first as u64, count, *seed)
            }
            DriverSource::Given(ens) => ChunkDrivers::from_ensembles(problem, ens),
        }
    };

    let recorded = recorded_indices(n_points, opts.record_stride);
    let mut out = Array3::<f64>::zeros((n_paths, recorded.len(), dim));
    let mut out_corrections: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); n_paths];
    let mut states: Vec<Vec<f64>> = vec![problem.h0.clone(); n_paths];
    let mut state_corrections: Vec<Option<Vec<f64>>> = vec![None; n_paths];
    let mut block_reports = Vec::new();

    for (start, end) in block_bounds(grid.n_intervals(), opts.blocks)? {
        let geom = BlockGeometry::new(&problem.operator, grid, start, end);
        let len = geom.len();
        let single = chunks.len() == 1;
        let mut pooled: Vec<Vec<f64>> = Vec::new();
        // (iterations, fixpoint) of each chunk's last iterate.
        let mut finals: Vec<(usize, Option<usize>)> = Vec::with_capacity(chunks.len());
        let mut block_corrections: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); n_paths];
        let mut end_states = states.clone();
        let mut end_corrections = state_corrections.clone();
        let mut harvest = |first: usize, iterates: &[PathIterate]| {
            for (q, it) in iterates.iter().enumerate() {
                let p = first + q;
                for (r_idx, &gj) in recorded.iter().enumerate() {
                    if gj < start || gj > end {
                        continue;
                    }
                    let l = gj - start;
                    for k in 0..dim {
                        out[[p, r_idx, k]] = it.values[l * dim + k];
                    }
                }
                block_corrections[p] = it
                    .corrections
                    .iter()
                    .filter(|(l, _)| *l > 0 && recorded.binary_search(&(start + l)).is_ok())
                    .map(|(l, c)| (start + l, c.clone()))
                    .collect();
                let last = len - 1;
                end_states[p] = it.values[last * dim..(last + 1) * dim].to_vec();
                end_corrections[p] = it
                    .corrections
                    .iter()
                    .find(|(l, _)| *l == last)
                    .map(|(_, c)| c.clone());
            }
        };

        for &(first, count) in &chunks {
            let drivers = load(first, count)?;
            let stop = if single {
                Stop::Local {
                    tol: opts.tol,
                    n_total: n_paths,
                }
            } else {
                Stop::Count(opts.max_iter)
            };
            let outcome = run_chunk(
                problem,
                grid,
                &geom,
                &drivers,
                &states[first..first + count],
                &state_corrections[first..first + count],
                stop,
                opts.max_iter,
            )?;
            for (m, s) in outcome.sums.iter().enumerate() {
                if pooled.len() <= m {
                    pooled.push(vec![0.0; len]);
                }
                for (a, b) in pooled[m].iter_mut().zip(s) {
                    *a += b;
                }
            }
            harvest(first, &outcome.iterates);
            finals.push((outcome.iterations, outcome.fixpoint));
        }

        let all_distances: Vec<f64> = pooled
            .iter()
            .map(|s| (s.iter().copied().fold(0.0, f64::max) / n_paths as f64).sqrt())
            .collect();
        let stop_at = all_distances.iter().position(|&d| d < opts.tol);
        let used = stop_at.map_or(all_distances.len(), |m| m + 1);
        let distances = all_distances[..used].to_vec();

        for (c, &(first, count)) in chunks.iter().enumerate() {
            let (iterations, fixpoint) = finals[c];
            if iterations == used || fixpoint.is_some_and(|f| f < used) {
                continue;
            }
            let drivers = load(first, count)?;
            let redo = run_chunk(
                problem,
                grid,
                &geom,
                &drivers,
                &states[first..first + count],
                &state_corrections[first..first + count],
                Stop::Count(used),
                opts.max_iter,
            )?;
            harvest(first, &redo.iterates);
        }
        states = end_states;
        state_corrections = end_corrections;
        for (all, block) in out_corrections.iter_mut().zip(block_corrections) {
            all.extend(block);
        }

        block_reports.push(BlockReport {
            start: grid.points()[start],
            end: grid.points()[end],
            converged: stop_at.is_some(),
            iterations: used,
            distances,
        });
    }

    let iterations = block_reports
        .iter()
        .map(|b| b.iterations)
        .max()
        .unwrap_or(0);
    let distances: Vec<f64> = (0..iterations)
        .map(|m| {
            block_reports
                .iter()
                .map(|b| b.distances.get(m).copied().unwrap_or(0.0))
                .fold(0.0, f64::max)
        })
        .collect();
    let report = PicardReport {
        residual: distances.last().copied().unwrap_or(0.0),
        converged: block_reports.iter().all(|b| b.converged),
        iterations,
        distances,
        blocks: block_reports,
    };

    let out_grid = TimeGrid::new(recorded.iter().map(|&j| grid.points()[j]).collect())?;
    let mut solution = PathEnsemble::from_values(out_grid.clone(), out)?.with_adapted(true);
    if let DriverSource::Simulate { seed } = source {
        solution = solution.with_seed(seed, 0);
    }
    if problem.drivers.iter().all(|d| !d.has_jumps()) {
        solution = solution.with_continuous(true);
    } else {
        let records = out_corrections
            .into_iter()
            .map(|mut cs| {
                cs.sort_by_key(|c| c.0);
                let times = cs.iter().map(|(j, _)| grid.points()[*j]).collect();
                let sizes = cs.into_iter().flat_map(|(_, c)| c).collect();
                JumpRecord::new(times, sizes, dim)
            })
            .collect::<Result<Vec<_>>>()?;
        solution = solution.with_jumps(records)?;
    }
    Ok((solution, report))
}

/// Picard iteration for the mild solution with freshly simulated drivers.
/// Driver `i` uses the random streams `(seed, i, path)`.
pub fn mild_solution_picard(
    problem: &SpdeProblem,
    grid: &TimeGrid,
    n_paths: usize,
    seed: u64,
    opts: &PicardOptions,
) -> Result<(PathEnsemble, PicardReport)> {
    solve(
        problem,
        grid,
        n_paths,
        DriverSource::Simulate { seed },
        opts,
    )
}

/// Picard iteration against given driver ensembles (one per `problem.drivers`
/// entry, sharing grid and paths).
pub fn mild_solution_with_drivers(
    problem: &SpdeProblem,
    drivers: &[PathEnsemble],
    opts: &PicardOptions,
) -> Result<(PathEnsemble, PicardReport)> {
    let first = drivers
        .first()
        .ok_or_else(|| Error::Consistency("no driver ensembles".into()))?;
    let grid = first.grid().clone();
    solve(
        problem,
        &grid,
        first.n_paths(),
        DriverSource::Given(drivers),
        opts,
    )
}

/// Left-endpoint stochastic convolution `Σ_{i<j} S_{t_j - t_i} Φ_{t_i} ΔX_i`.
pub fn stochastic_convolution(
    op: &SpectralOperator,
    phi: &PathEnsemble,
    spec: &LevySpec,
    x: &PathEnsemble,
) -> Result<PathEnsemble> {
    spec.validate()?;
    if !phi.is_adapted() {
        return Err(Error::NotAdapted);
    }
    if phi.dim() != op.dim() {
        return Err(Error::Consistency(format!(
            "integrand has dimension {}, operator {}",
            phi.dim(),
            op.dim()
        )));
    }
    if x.dim() != 1 || phi.n_paths() != x.n_paths() {
        return Err(Error::Consistency(
            "driver must be scalar and path-paired".into(),
        ));
    }
    if phi.grid() != x.grid() {
        return Err(Error::Grid("integrand and driver must share a grid".into()));
    }
    let grid = phi.grid();
    let pts = grid.points();
    let dim = op.dim();
    let (n_paths, n_points, _) = phi.values().dim();
    let decay: Vec<Vec<f64>> = pts.windows(2).map(|w| op.factors(w[1] - w[0])).collect();
    let mut out = Array3::zeros((n_paths, n_points, dim));
    let pv = phi.values();
    for p in 0..n_paths {
        let mut acc = vec![0.0; dim];
        for j in 0..n_points - 1 {
            let dx = x.scalar(p, j + 1) - x.scalar(p, j);
            for k in 0..dim {
                acc[k] = decay[j][k] * (acc[k] + pv[[p, j, k]] * dx);
                out[[p, j + 1, k]] = acc[k];
            }
        }
    }
    let mut ens = PathEnsemble::from_values(grid.clone(), out)?.with_adapted(true);
    if let Some(seed) = x.seed() {
        ens = ens.with_seed(seed, x.first_path());
    }
    if x.is_continuous() {
        return Ok(ens.with_continuous(true));
    }
    match x.jumps() {
        Some(records) => {
            let jumps = records
                .iter()
                .enumerate()
                .map(|(p, rec)| {
                    let mut times = Vec::new();
                    let mut sizes = Vec::new();
                    for (j, i) in on_grid_jumps(grid, rec) {
                        times.push(rec.times()[i]);
                        let s = rec.size(i)[0];
                        sizes.extend((0..dim).map(|k| decay[j - 1][k] * pv[[p, j - 1, k]] * s));
                    }
                    JumpRecord::new(times, sizes, dim)
                })
                .collect::<Result<Vec<_>>>()?;
            ens.with_jumps(jumps)
        }
        None => Ok(ens),
    }
}

/// Per-coordinate variance of the linear additive solution at time `t`:
/// `c·σ_k²·(1 - e^{-2μ_k t}) / (2μ_k)`, or `c·σ_k²·t` when `μ_k = 0`.
pub fn linear_variance_oracle(
    op: &SpectralOperator,
    sigma: &[f64],
    spec: &LevySpec,
    t: f64,
) -> Vec<f64> {
    let c = spec.bracket_rate();
    op.eigenvalues()
        .iter()
        .zip(sigma)
        .map(|(&mu, &s)| {
            if mu == 0.0 {
                c * s * s * t
            } else {
                c * s * s * (1.0 - (-2.0 * mu * t).exp()) / (2.0 * mu)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionDiagnostics {
    pub modulus: ContinuityModulus,
    pub max_modulus: Estimate,
    pub adapted: bool,
}

pub fn solution_diagnostics(solution: &PathEnsemble) -> Result<SolutionDiagnostics> {
    let modulus = ms_continuity_modulus(solution)?;
    Ok(SolutionDiagnostics {
        max_modulus: modulus.max(),
        modulus,
        adapted: solution.is_adapted(),
    })
}

/// Continuity moduli of the solution on a grid and on its halving.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub coarse_mesh: f64,
    pub coarse: Estimate,
    pub fine: Estimate,
    pub decreased: bool,
    pub coarse_report: PicardReport,
    pub fine_report: PicardReport,
}

/// Solves on `steps` and `2·steps` uniform intervals with the same seed and
/// compares the largest mean-square increments. `decreased` requires the
/// fine modulus to sit below the coarse one.
pub fn refinement_diagnostics(
    problem: &SpdeProblem,
    horizon: f64,
    steps: usize,
    n_paths: usize,
    seed: u64,
    opts: &PicardOptions,
) -> Result<RefinementReport> {
    let opts = PicardOptions {
        record_stride: 1,
        ..*opts
    };
    let coarse_grid = TimeGrid::uniform(horizon, steps)?;
    let fine_grid = TimeGrid::uniform(horizon, 2 * steps)?;
    let (coarse_sol, coarse_report) =
        mild_solution_picard(problem, &coarse_grid, n_paths, seed, &opts)?;
    let coarse = solution_diagnostics(&coarse_sol)?.max_modulus;
    drop(coarse_sol);
    let (fine_sol, fine_report) = mild_solution_picard(problem, &fine_grid, n_paths, seed, &opts)?;
    let fine = solution_diagnostics(&fine_sol)?.max_modulus;
    Ok(RefinementReport {
        coarse_mesh: coarse_grid.mesh(),
        decreased: fine.value < coarse.value,
        coarse,
        fine,
        coarse_report,
        fine_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::simulate_paths;

    fn noiseless(dim: usize, h0: Vec<f64>) -> SpdeProblem {
        SpdeProblem {
            operator: SpectralOperator::heat(dim).unwrap(),
            h0,
            alpha: Coefficient::Zero,
            sigmas: vec![],
            drivers: vec![],
        }
    }

    #[test]
    fn semigroup_basics() {
        let op = SpectralOperator::new(vec![1.0, 4.0]).unwrap();
        assert_eq!(op.apply(0.0, &[3.0, -2.0]).unwrap(), vec![3.0, -2.0]);
        let v = op.apply(2f64.ln(), &[1.0, 1.0]).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 1.0 / 16.0).abs() < 1e-15);
        assert!(matches!(op.apply(-1.0, &[1.0, 1.0]), Err(Error::Domain(_))));
        assert!(SpectralOperator::new(vec![-1.0]).is_err());
        assert!(SpectralOperator::new(vec![]).is_err());
    }

    #[test]
    fn growth_bounds() {
        assert_eq!(
            pseudo_contractivity_bound(&SpectralOperator::heat(10).unwrap()),
            -1.0
        );
        assert_eq!(
            pseudo_contractivity_bound(&SpectralOperator::new(vec![0.0; 3]).unwrap()),
            0.0
        );
        assert_eq!(
            pseudo_contractivity_bound(&SpectralOperator::new(vec![3.0, 7.0]).unwrap()),
            -3.0
        );
    }

    #[test]
    fn lipschitz_spot_check_catches_understatement() {
        assert!(Coefficient::Sine(0.25).check_lipschitz(3, 200, 1).is_ok());
        let lying = Coefficient::custom("2x", 1.0, |_, x, out| {
            for (o, v) in out.iter_mut().zip(x) {
                *o = 2.0 * v;
            }
        });
        assert!(matches!(
            lying.check_lipschitz(2, 200, 1),
            Err(Error::Parameter {
                field: "lipschitz",
                ..
            })
        ));
    }

    #[test]
    fn noiseless_solution_is_semigroup_orbit() {
        let problem = noiseless(3, vec![1.0, 2.0, -1.0]);
        let grid = TimeGrid::uniform(1.0, 20).unwrap();
        let (sol, report) =
            mild_solution_picard(&problem, &grid, 2, 1, &PicardOptions::default()).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.distances, vec![0.0]);
        assert!(report.converged);
        for (j, &t) in grid.points().iter().enumerate() {
            let expect = problem.operator.apply(t, &problem.h0).unwrap();
            for k in 0..3 {
                assert!((sol.values()[[1, j, k]] - expect[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn problem_validation() {
        let mut p = noiseless(2, vec![1.0]);
        assert!(matches!(
            p.validate(),
            Err(Error::Parameter { field: "h0", .. })
        ));
        p.h0 = vec![0.0, 0.0];
        p.sigmas = vec![Coefficient::Constant(vec![1.0, 1.0])];
        assert!(matches!(
            p.validate(),
            Err(Error::Parameter {
                field: "sigmas",
                ..
            })
        ));
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let bad = PicardOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(mild_solution_picard(&noiseless(1, vec![0.0]), &grid, 1, 1, &bad).is_err());
    }

    #[test]
    fn scalar_ode_matches_left_euler() {
        let a = 0.8;
        let problem = SpdeProblem {
            operator: SpectralOperator::new(vec![0.0]).unwrap(),
            h0: vec![1.0],
            alpha: Coefficient::Linear(a),
            sigmas: vec![],
            drivers: vec![],
        };
        let steps = 200;
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let opts = PicardOptions {
            tol: 1e-14,
            max_iter: 200,
            ..Default::default()
        };
        let (sol, report) = mild_solution_picard(&problem, &grid, 1, 0, &opts).unwrap();
        assert!(report.converged);
        let h = 1.0 / steps as f64;
        let euler = (1.0 + a * h).powi(steps as i32);
        assert!((sol.scalar(0, steps) - euler).abs() < 1e-12);
        // Left-Euler error against e^{a} is O(h).
        assert!((sol.scalar(0, steps) - a.exp()).abs() < 2.0 * h * a.exp());
    }

    #[test]
    fn convolution_with_zero_integrand_vanishes() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let spec = LevySpec::brownian(1.0);
        let x = simulate_paths(&spec, &grid, 3, 2).unwrap();
        let op = SpectralOperator::heat(2).unwrap();
        let zero = PathEnsemble::deterministic(&grid, 3, 2, |_, _| {}).unwrap();
        let c = stochastic_convolution(&op, &zero, &spec, &x).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn oracle_values() {
        let flat = SpectralOperator::new(vec![0.0]).unwrap();
        assert_eq!(
            linear_variance_oracle(&flat, &[1.0], &LevySpec::brownian(1.0), 1.0),
            vec![1.0]
        );
        let one = SpectralOperator::new(vec![1.0]).unwrap();
        assert_eq!(
            linear_variance_oracle(&one, &[1.0], &LevySpec::brownian(1.0), f64::INFINITY),
            vec![0.5]
        );
        let v = linear_variance_oracle(&one, &[2.0], &LevySpec::compensated_poisson(3.0), 1.0);
        assert!((v[0] - 6.0 * (1.0 - (-2.0f64).exp())).abs() < 1e-14);
    }

    fn additive(dim: usize, spec: LevySpec) -> SpdeProblem {
        SpdeProblem {
            operator: SpectralOperator::heat(dim).unwrap(),
            h0: vec![0.0; dim],
            alpha: Coefficient::Zero,
            sigmas: vec![Coefficient::Constant(vec![1.0; dim])],
            drivers: vec![spec],
        }
    }

    #[test]
    fn additive_noise_is_fixed_after_one_update() {
        let problem = additive(3, LevySpec::brownian(1.0));
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let (_, report) =
            mild_solution_picard(&problem, &grid, 20, 5, &PicardOptions::default()).unwrap();
        assert_eq!(report.iterations, 2);
        assert!(report.distances[0] > 0.0);
        assert_eq!(report.distances[1], 0.0);
    }

    #[test]
    fn chunking_and_stride_do_not_change_values() {
        let problem = SpdeProblem {
            alpha: Coefficient::Sine(0.3),
            sigmas: vec![Coefficient::Cosine(0.2)],
            ..additive(2, LevySpec::compensated_poisson(2.0))
        };
        let grid = TimeGrid::uniform(1.0, 40).unwrap();
        let base = PicardOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let (a, ra) = mild_solution_picard(&problem, &grid, 30, 9, &base).unwrap();
        let chunked = PicardOptions {
            chunk_paths: Some(7),
            record_stride: 8,
            ..base
        };
        let (b, rb) = mild_solution_picard(&problem, &grid, 30, 9, &chunked).unwrap();
        assert_eq!(ra.iterations, rb.iterations);
        assert_eq!(b.n_points(), 6);
        for p in 0..30 {
            for (r, j) in [0usize, 8, 16, 24, 32, 40].iter().enumerate() {
                for k in 0..2 {
                    assert_eq!(a.values()[[p, *j, k]], b.values()[[p, r, k]]);
                }
            }
        }
    }

    #[test]
    fn flat_scalar_equation_is_euler_scheme() {
        let spec = LevySpec::standard_poisson(3.0);
        let problem = SpdeProblem {
            operator: SpectralOperator::new(vec![0.0]).unwrap(),
            h0: vec![0.5],
            alpha: Coefficient::Sine(0.4),
            sigmas: vec![Coefficient::Cosine(0.3)],
            drivers: vec![spec],
        };
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let opts = PicardOptions {
            tol: 1e-15,
            max_iter: 200,
            ..Default::default()
        };
        let (sol, _) = mild_solution_picard(&problem, &grid, 8, 4, &opts).unwrap();
        let x = simulate_driver(&spec, &grid, 0, 0, 8, 4).unwrap();
        let h = grid.mesh();
        for p in 0..8 {
            let mut y: f64 = 0.5;
            for j in 0..100 {
                assert!((sol.scalar(p, j) - y).abs() < 1e-12);
                y += 0.4 * y.sin() * h + 0.3 * y.cos() * (x.scalar(p, j + 1) - x.scalar(p, j));
            }
            assert!((sol.scalar(p, 100) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_convolution_is_levy_integral() {
        let grid = TimeGrid::uniform(1.0, 30).unwrap();
        let spec = LevySpec::standard_poisson(2.0);
        let x = simulate_paths(&spec, &grid, 4, 3).unwrap();
        let phi = PathEnsemble::deterministic_scalar(&grid, 4, |t| 1.0 + t).unwrap();
        let op = SpectralOperator::new(vec![0.0]).unwrap();
        let c = stochastic_convolution(&op, &phi, &spec, &x).unwrap();
        let l = crate::integral::levy_integral(&phi, &spec, &x).unwrap();
        for p in 0..4 {
            for j in 0..31 {
                assert!((c.scalar(p, j) - l.scalar(p, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn blocks_give_same_linear_solution() {
        let problem = additive(2, LevySpec::brownian(1.0));
        let grid = TimeGrid::uniform(1.0, 60).unwrap();
        let (a, _) =
            mild_solution_picard(&problem, &grid, 5, 2, &PicardOptions::default()).unwrap();
        let opts = PicardOptions {
            blocks: 3,
            ..Default::default()
        };
        let (b, rb) = mild_solution_picard(&problem, &grid, 5, 2, &opts).unwrap();
        assert_eq!(rb.blocks.len(), 3);
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn block_and_record_layout() {
        assert_eq!(block_bounds(10, 3).unwrap(), vec![(0, 3), (3, 6), (6, 10)]);
        assert!(block_bounds(2, 3).is_err());
        assert_eq!(recorded_indices(11, 4), vec![0, 4, 8, 10]);
        assert_eq!(recorded_indices(9, 4), vec![0, 4, 8]);
    }
}
