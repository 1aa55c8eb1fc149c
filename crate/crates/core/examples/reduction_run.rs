//! Runs a full reduction from an experiment file and prints every tenth
//! trace row.
//!
//! ```text
//! cargo run --release --example reduction_run -- crates/core/configs/strong_rung_su2.cfg
//! ```

use ladder_reduce::experiment::{ExperimentConfig, RunSummary};
use ladder_reduce::run_reduction_with;

fn main() -> ladder_reduce::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/configs/intermediate_rung_su2.cfg"
        )
        .into()
    });
    let cfg = ExperimentConfig::from_file(&path)?.reduction_config()?;

    println!(
        "{:>6} {:>12} {:>10} {:>10} {:>8} {:>6}  flags",
        "n", "g", "e1", "p1 %", "s", "rel"
    );
    let trace = run_reduction_with(&cfg, |s| {
        if s.n % 10 == 0 || !s.flags.is_empty() {
            println!(
                "{:>6} {:>12.6} {:>10.6} {:>10.4} {:>8.4} {:>6}  {}",
                s.n,
                s.g,
                s.energies[0],
                s.p1(),
                s.entropy,
                s.relevant_count,
                s.flags
            );
        }
        Ok(())
    })?;
    println!();
    print!("{}", RunSummary::from_trace(&trace));
    Ok(())
}
