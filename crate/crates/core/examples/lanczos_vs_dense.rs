//! Checks the Krylov solver against a dense symmetric eigensolver on a
//! full magnetization sector.
//!
//! ```text
//! cargo run --release --example lanczos_vs_dense -- 6
//! ```

use std::time::Instant;

use ladder_reduce::{
    assemble_su2, build_su2_basis, dense_lowest, lanczos_lowest, CouplingSet, SolverConfig,
};

fn main() -> ladder_reduce::Result<()> {
    let rungs: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(5);
    let h = assemble_su2(
        &build_su2_basis(rungs, 0)?,
        &CouplingSet::new(15.0, 5.0, 3.0)?,
    )?;

    let t = Instant::now();
    let krylov = lanczos_lowest(h.dim(), |x, y| h.apply(x, y), &SolverConfig::default())?;
    let t_krylov = t.elapsed();
    let t = Instant::now();
    let dense = dense_lowest(&h.to_dense(), 4);
    let t_dense = t.elapsed();

    println!("n = {}, Krylov dimension {}", h.dim(), krylov.iterations);
    println!(
        "{:>3} {:>24} {:>24} {:>10} {:>10}",
        "i", "lanczos", "dense", "rel", "residual"
    );
    for i in 0..4 {
        let (a, b) = (krylov.values[i], dense.values[i]);
        println!(
            "{:>3} {a:>24.16e} {b:>24.16e} {:>10.2e} {:>10.2e}",
            i + 1,
            ((a - b) / b).abs(),
            krylov.residuals[i]
        );
    }
    println!("lanczos {t_krylov:.2?}, dense {t_dense:.2?}");
    Ok(())
}
