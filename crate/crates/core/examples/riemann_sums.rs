//! Left-endpoint sums of ∫Φ dM for a few integrands, and the full G-integral
//! process on the simulation grid.

use stochint::integral::{g_integral_process, riemann_sum, uniform_partition};
use stochint::levy::{martingale_part, simulate_paths};
use stochint::stats;
use stochint::{LevySpec, PathEnsemble, TimeGrid};

fn main() -> stochint::Result<()> {
    let spec = LevySpec::compensated_poisson(4.0);
    let grid = TimeGrid::uniform(1.0, 512)?;
    let x = simulate_paths(&spec, &grid, 5_000, 11)?;
    let m = martingale_part(&spec, &x)?;

    let time = PathEnsemble::deterministic_scalar(&grid, x.n_paths(), |t| t)?;
    for h in [0.25, 1.0 / 16.0, 1.0 / 512.0] {
        let part = uniform_partition(1.0, h)?;
        let s = riemann_sum(&time, &m, &part)?;
        let e = stats::mean(&s.scalars());
        println!("∫ t dM, mesh {h:<9.6}: mean {:+.4} ± {:.4}", e.value, e.se);
    }

    // ∫ M_{t-} dM via the process on the whole grid.
    let y = g_integral_process(&m, &m)?;
    let last = grid.len() - 1;
    let terminal: Vec<f64> = (0..y.n_paths()).map(|p| y.scalar(p, last)).collect();
    let e = stats::mean(&terminal);
    println!(
        "∫ M dM at T: mean {:+.4} ± {:.4} (martingale: 0)",
        e.value, e.se
    );
    let p = 0;
    println!(
        "path {p}: M_T = {:.3}, (∫M dM)_T = {:.3}",
        m.scalar(p, last),
        y.scalar(p, last)
    );
    Ok(())
}
