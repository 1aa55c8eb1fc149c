//! Ground-state amplitude structure against the rung coupling: entropy
//! per site and the number of relevant amplitudes in both bases.
//!
//! ```text
//! cargo run --release --example amplitude_structure
//! ```

use ladder_reduce::observables::DEFAULT_RELEVANCE;
use ladder_reduce::{
    assemble, build_basis, entropy_per_site, lanczos_lowest, relevant_amplitudes, CouplingSet,
    Scheme, SolverConfig,
};

fn main() -> ladder_reduce::Result<()> {
    let rungs = 6;
    let solver = SolverConfig {
        k: 1,
        ..SolverConfig::default()
    };
    println!("{:>6} {:>6} {:>10} {:>8}", "scheme", "J_t", "s", "relevant");
    for scheme in [Scheme::Su2, Scheme::So4] {
        let basis = build_basis(scheme, rungs, 0)?;
        for jt in [15.0, 5.5, 2.5] {
            let h = assemble(&basis, &CouplingSet::new(jt, 5.0, 3.0)?)?;
            let sol = lanczos_lowest(h.dim(), |x, y| h.apply(x, y), &solver)?;
            let a = sol.ground_state();
            println!(
                "{:>6} {:>6} {:>10.5} {:>8}",
                scheme.to_string(),
                jt,
                entropy_per_site(a, rungs)?,
                relevant_amplitudes(a, DEFAULT_RELEVANCE)
            );
        }
    }
    Ok(())
}
