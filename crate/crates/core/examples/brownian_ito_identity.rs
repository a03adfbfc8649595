//! Left sums of ∫W dW against Itô's formula ½(W_T² − T); the mean-square
//! gap is T·h/2.

use stochint::identity::brownian_ito_identity_check;

fn main() -> stochint::Result<()> {
    let meshes = [1e-1, 1e-2, 1e-3];
    let study = brownian_ito_identity_check(1.0, &meshes, 10_000, 8)?;
    for row in &study.rows {
        println!(
            "h = {:.0e}  E|Σ − ½(W² − T)|² = {:.3e} ± {:.1e}   T·h/2 = {:.3e}",
            row.mesh,
            row.diff,
            row.se,
            row.mesh / 2.0
        );
    }
    Ok(())
}
