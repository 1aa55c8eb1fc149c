//! Enumerates both bases of a small ladder and checks that the rung
//! transform between them is orthogonal.
//!
//! ```text
//! cargo run --example basis_states -- 3
//! ```

use ladder_reduce::{build_so4_basis, build_su2_basis, rung_transform};

fn main() -> ladder_reduce::Result<()> {
    let rungs: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(2);
    let su2 = build_su2_basis(rungs, 0)?;
    let so4 = build_so4_basis(rungs, 0)?;
    println!("L = {rungs}, M = 0: {} states in each basis", su2.len());

    println!("\n{:>4}  {:<12} {:<12}", "#", "spins", "rungs");
    for i in 0..su2.len().min(12) {
        println!("{:>4}  {:<12} {:<12}", i + 1, su2.label(i), so4.label(i));
    }

    let u = rung_transform(&su2, &so4)?;
    let err = (&u * u.transpose() - nalgebra::DMatrix::identity(u.nrows(), u.nrows())).amax();
    println!("\n|U U^T - 1|_max = {err:.2e}");

    let mut dump = Vec::new();
    so4.write_dump(&mut dump)?;
    let text = String::from_utf8_lossy(&dump);
    println!("\nbasis dump (first lines):");
    text.lines().take(4).for_each(|l| println!("  {l}"));
    Ok(())
}
