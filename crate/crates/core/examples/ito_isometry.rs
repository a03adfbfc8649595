//! Itô isometry E|∫ᵖΦ dM|² = c·E∫|ᵖΦ|² dt, accumulated chunk by chunk.

use stochint::ito::IsometrySamples;
use stochint::levy::{martingale_part, simulate_driver};
use stochint::{JumpLaw, LevySpec, PathEnsemble, TimeGrid};

fn main() -> stochint::Result<()> {
    let grid = TimeGrid::uniform(1.0, 1000)?;
    let drivers = [
        LevySpec::brownian(1.0),
        LevySpec::compensated_poisson(2.0),
        LevySpec::compound_poisson(3.0, JumpLaw::TwoPoint { magnitude: 1.0 }),
    ];
    let (paths, chunk) = (40_000, 10_000);
    for (d, spec) in drivers.iter().enumerate() {
        let mut by_integrand = [
            IsometrySamples::new(),
            IsometrySamples::new(),
            IsometrySamples::new(),
        ];
        for first in (0..paths).step_by(chunk) {
            let x = simulate_driver(spec, &grid, d, first as u64, chunk, 1)?;
            let m = martingale_part(spec, &x)?;
            let one = PathEnsemble::deterministic_scalar(&grid, chunk, |_| 1.0)?;
            let time = PathEnsemble::deterministic_scalar(&grid, chunk, |t| t)?;
            by_integrand[0].absorb(&one, spec, &m)?;
            by_integrand[1].absorb(&time, spec, &m)?;
            by_integrand[2].absorb(&m, spec, &m)?;
        }
        println!("{:?}", spec.kind);
        for (name, s) in ["1", "t", "M_-"].iter().zip(&by_integrand) {
            let r = s.report();
            println!(
                "  Φ = {name:<4} lhs {:.4} ± {:.4}  rhs {:.4} ± {:.4}  z {:+.2}",
                r.lhs.value, r.lhs.se, r.rhs.value, r.rhs.se, r.z
            );
        }
    }
    Ok(())
}
