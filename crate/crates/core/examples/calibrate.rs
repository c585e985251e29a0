//! Re-runs the calibration that produced the shipped Requisites parameters.
//!
//! ```text
//! cargo run --release --example calibrate -- [seed] [budget] [out.toml]
//! ```

use std::time::Instant;

use requisites::model::{calibrate, default_constraints, DEFAULT_BUDGET, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_SEED);
    let budget = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_BUDGET);
    let out = args.next();

    let constraints = default_constraints();
    let started = Instant::now();
    let result = calibrate(&constraints, seed, budget)?;
    println!(
        "seed {seed}, budget {budget}: residual {:.3e} after {} evaluations ({} sweeps, {:.2?})",
        result.residual,
        result.evaluations,
        result.trace.len() - 1,
        started.elapsed()
    );
    match out {
        Some(path) => std::fs::write(&path, result.params.to_toml())?,
        None => print!("{}", result.params.to_toml()),
    }
    Ok(())
}
