//! A single elimination on a small ladder: the renormalization scalars,
//! the quadratic for the new coupling and the spectrum before and after.
//!
//! ```text
//! cargo run --example renormalization_step
//! ```

use ladder_reduce::reduction::prepare;
use ladder_reduce::{
    feshbach_coefficients, solve_renormalization, CouplingSet, Reducer, ReductionConfig, Scheme,
};

fn main() -> ladder_reduce::Result<()> {
    let cfg = ReductionConfig::new(Scheme::Su2, 4, CouplingSet::new(5.5, 5.0, 3.0)?);
    let (basis, h) = prepare(&cfg)?;
    let (mut reducer, first) = Reducer::new(h, cfg.rungs, &cfg)?;

    // Drop a few states so the eliminated one carries weight.
    for _ in 0..40 {
        reducer.step()?;
    }
    let elim = reducer.next_elimination();
    let psi = reducer.solution().ground_state().to_vec();
    let inputs = feshbach_coefficients(reducer.hamiltonian(), &psi, reducer.lambda_target(), elim)?;
    let q = inputs.quadratic();
    let (g, flags) = solve_renormalization(&inputs);

    println!(
        "n = {}, eliminating {} (amplitude {:.3e})",
        reducer.dim(),
        basis.label(elim),
        psi[elim]
    );
    println!("{inputs:#?}");
    println!(
        "alpha = {:.6e}, beta = {:.6e}, gamma = {:.6e}",
        q.alpha, q.beta, q.gamma
    );
    println!(
        "g: {:.12} -> {g:.12} [{flags}], residual {:.1e}",
        inputs.g_prev,
        q.eval(g)
    );

    let row = reducer.step()?;
    println!(
        "lambda1: target {:.12}, after step {:.12}",
        first.lambdas[0], row.lambdas[0]
    );
    Ok(())
}
