//! Drive an experiment from a TOML string, the same way the `stochint`
//! binary does, and write its tables to ./results.

use stochint::cli::{emit_report, run_experiment, ExperimentConfig, Kind};

const CONFIG: &str = r#"
seed = 3
paths = 20000
integrands = ["one", "time", "driver"]

[grid]
horizon = 1.0
steps = 500

[[drivers]]
kind = "compound_poisson"
intensity = 2.0
jump_law = "normal"
jump_mean = 0.0
jump_std_dev = 0.5
"#;

fn main() -> stochint::Result<()> {
    let prepared = ExperimentConfig::parse(CONFIG)?.prepare(Kind::Isometry)?;
    let outcome = run_experiment(&prepared)?;
    let emitted = emit_report(&prepared, &outcome, "results".as_ref())?;
    print!("{}", emitted.summary);
    for f in emitted.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
