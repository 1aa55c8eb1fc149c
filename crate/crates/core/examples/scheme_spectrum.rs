//! Lowest levels of the ladder assembled in both bases, side by side.
//!
//! ```text
//! cargo run --release --example scheme_spectrum -- 6 15 5 3
//! ```

use ladder_reduce::experiment::{spectrum, ExperimentConfig};

fn main() -> ladder_reduce::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let (rungs, jt, jl, jc) = match args[..] {
        [l, t, s, c] => (l as usize, t, s, c),
        _ => (4, 15.0, 5.0, 3.0),
    };
    let text = format!("scheme = su2\nL = {rungs}\nJ_t = {jt}\nJ_l = {jl}\nJ_c = {jc}\n");
    let cfg = ExperimentConfig::parse(&text, "<args>")?;
    print!("{}", spectrum(&cfg, 4)?);
    Ok(())
}
