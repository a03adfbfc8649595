//! Simulate each driver kind and compare terminal moments with the
//! decomposition X = M + b·t, ⟨M⟩_t = c·t.

use stochint::levy::simulate_paths;
use stochint::stats;
use stochint::{JumpLaw, LevySpec, TimeGrid};

fn main() -> stochint::Result<()> {
    let grid = TimeGrid::uniform(2.0, 200)?;
    let drivers = [
        (
            "brownian σ=0.5, b=1",
            LevySpec::brownian(0.5).with_drift(1.0),
        ),
        (
            "compensated poisson λ=2",
            LevySpec::compensated_poisson(2.0),
        ),
        ("standard poisson λ=2", LevySpec::standard_poisson(2.0)),
        (
            "compound poisson λ=3, ±1",
            LevySpec::compound_poisson(3.0, JumpLaw::TwoPoint { magnitude: 1.0 }),
        ),
        (
            "compound poisson λ=1, Exp(2)",
            LevySpec::compound_poisson(1.0, JumpLaw::Exponential { rate: 2.0 }),
        ),
    ];
    let t = grid.horizon();
    for (name, spec) in drivers {
        let x = simulate_paths(&spec, &grid, 20_000, 3)?;
        let last = grid.len() - 1;
        let terminal: Vec<f64> = (0..x.n_paths()).map(|p| x.scalar(p, last)).collect();
        let mean = stats::mean(&terminal);
        let var = stats::variance(&terminal);
        println!("{name}");
        println!(
            "  E X_T   = {:.4} ± {:.4}   (b·T = {})",
            mean.value,
            mean.se,
            spec.decomposition_drift() * t
        );
        println!(
            "  Var X_T = {:.4} ± {:.4}   (c·T = {})",
            var.value,
            var.se,
            spec.bracket_rate() * t
        );
        if let Some(jumps) = x.jumps() {
            let n: usize = jumps.iter().map(|r| r.len()).sum();
            println!("  {:.3} jumps per path", n as f64 / x.n_paths() as f64);
        }
    }
    Ok(())
}
