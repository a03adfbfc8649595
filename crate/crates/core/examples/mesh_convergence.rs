//! Cauchy study of ∫W dW: squared L² gaps of coarse sums to the finest sum
//! shrink linearly in the mesh.

use stochint::integral::mesh_convergence_study;
use stochint::levy::simulate_paths;
use stochint::{LevySpec, TimeGrid};

fn main() -> stochint::Result<()> {
    let meshes: Vec<f64> = (4..=10).map(|e| 2f64.powi(-e)).collect();
    let grid = TimeGrid::uniform(1.0, 1024)?;
    let w = simulate_paths(&LevySpec::brownian(1.0), &grid, 10_000, 5)?;
    let study = mesh_convergence_study(&w, &w, &meshes, 1.0)?;
    study.write_columnar(std::io::stdout().lock())?;
    println!("strictly decreasing: {}", study.strictly_decreasing());
    println!("fitted exponent: {:.3}", study.rate.unwrap_or(f64::NAN));
    Ok(())
}
