//! Jumps landing on grid points: the predictable version drops them, the
//! left limit agrees, and the embedding bound holds.

use ndarray::Array3;
use stochint::grid::left_limit;
use stochint::ito::{
    embedding_norm_check, g_vs_predictable_distance, predictable_version, projection_vs_left_limit,
};
use stochint::levy::{jump_path_values, martingale_part, sample_jumps};
use stochint::rng::path_rng;
use stochint::{LevySpec, PathEnsemble, TimeGrid};

fn main() -> stochint::Result<()> {
    let spec = LevySpec::standard_poisson(5.0);
    let n = 200;
    let records: Vec<_> = (0..n)
        .map(|p| sample_jumps(&spec, 1.0, &mut path_rng(9, p)))
        .collect();
    let times: Vec<f64> = records.iter().flat_map(|r| r.times().to_vec()).collect();
    let grid = TimeGrid::uniform(1.0, 20)?.augmented(&times)?;
    let mut values = Array3::zeros((n as usize, grid.len(), 1));
    for (p, r) in records.iter().enumerate() {
        for (j, v) in jump_path_values(&spec, r, &grid).into_iter().enumerate() {
            values[[p, j, 0]] = v;
        }
    }
    let x = PathEnsemble::from_values(grid.clone(), values)?
        .with_adapted(true)
        .with_origin(spec)
        .with_jumps(records.clone())?;

    let px = predictable_version(&x)?;
    let lx = left_limit(&x)?;
    let j = grid
        .locate_exact(records[0].times()[0])
        .expect("jump on grid");
    println!("path 0 at its first jump t = {:.4}:", grid.points()[j]);
    println!(
        "  X = {}, ᵖX = {}, X₋ = {}",
        x.scalar(0, j),
        px.scalar(0, j),
        lx.scalar(0, j)
    );
    println!(
        "projection vs left limit: {:e}",
        projection_vs_left_limit(&x)?
    );

    let emb = embedding_norm_check(&x)?;
    println!(
        "∫E|ᵖX|² dt = {:.4} ≤ T·sup E|X|² = {:.4}: {}",
        emb.lhs.value, emb.rhs.value, emb.holds
    );
    let m = martingale_part(&spec, &x)?;
    println!(
        "‖G-integral − Itô integral‖ of ∫X dM: {:.4}",
        g_vs_predictable_distance(&x, &m)?
    );
    Ok(())
}
