//! Heat equation with additive noise: compare the empirical variance of each
//! mode against the closed form c·σ²(1 - e^{-2μt}) / 2μ.

use stochint::spde::{
    linear_variance_oracle, mild_solution_picard, Coefficient, PicardOptions, SpdeProblem,
    SpectralOperator,
};
use stochint::{LevySpec, TimeGrid};

fn main() -> stochint::Result<()> {
    let dim = 10;
    let spec = LevySpec::brownian(1.0);
    let sigma = vec![1.0; dim];
    let problem = SpdeProblem {
        operator: SpectralOperator::heat(dim)?,
        h0: vec![0.0; dim],
        alpha: Coefficient::Zero,
        sigmas: vec![Coefficient::Constant(sigma.clone())],
        drivers: vec![spec],
    };
    let n_paths: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let grid = TimeGrid::uniform(1.0, 4000)?;
    let opts = PicardOptions {
        record_stride: 1000,
        ..Default::default()
    };
    let start = std::time::Instant::now();
    let (sol, report) = mild_solution_picard(&problem, &grid, n_paths, 7, &opts)?;
    println!(
        "{} paths, {} Picard updates, {:.1?}",
        n_paths,
        report.iterations,
        start.elapsed()
    );

    let moments = sol.values();
    for (r, &t) in sol.grid().points().iter().enumerate().skip(1) {
        let oracle = linear_variance_oracle(&problem.operator, &sigma, &spec, t);
        println!("t = {t:.2}");
        for k in [0, 4, 9] {
            let var = (0..n_paths)
                .map(|p| moments[[p, r, k]].powi(2))
                .sum::<f64>()
                / n_paths as f64;
            println!(
                "  mode {:2}: empirical {:.5}  oracle {:.5}  rel {:+.3}",
                k + 1,
                var,
                oracle[k],
                var / oracle[k] - 1.0
            );
        }
    }
    Ok(())
}
