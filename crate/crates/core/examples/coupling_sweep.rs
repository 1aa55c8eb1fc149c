//! Repeats a reduction across rung couplings in parallel and tabulates
//! how deep each run stays accurate.
//!
//! ```text
//! LADDER_REDUCE_THREADS=3 cargo run --release --example coupling_sweep -- 15,5.5,2.5
//! ```

use ladder_reduce::experiment::{sweep, sweep_table, ExperimentConfig, THREADS_ENV};

fn main() -> ladder_reduce::Result<()> {
    let values: Vec<f64> = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "15,2.5".into())
        .split(',')
        .filter_map(|v| v.trim().parse().ok())
        .collect();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let out = std::env::temp_dir().join("ladder_sweep.csv");
    let text = format!(
        "scheme = su2\nL = 6\nJ_t = 15\nJ_l = 5\nJ_c = 3\noutput = {}\n",
        out.display()
    );
    let base = ExperimentConfig::parse(&text, "<sweep>")?;
    print!("{}", sweep_table(&sweep(&base, &values)));
    Ok(())
}
