//! Hilbert-space reduction for frustrated two-leg spin-1/2 ladders.
//!
//! The ladder Hamiltonian is built in either the product (SU(2)) basis or
//! the rung singlet/triplet (SO(4)) basis of a fixed magnetization sector.
//! Basis states are then removed one at a time, highest diagonal energy
//! first, while the rung coupling is renormalized so that the ground-state
//! energy of the shrinking space stays at its full-space value. Every step
//! is recorded with the four lowest levels, their relative deviations, the
//! amplitude entropy of the ground state and the number of relevant
//! amplitudes.
//!
//! ```no_run
//! use ladder_reduce::{run_reduction, CouplingSet, ReductionConfig, Scheme};
//!
//! let couplings = CouplingSet::new(15.0, 5.0, 3.0)?;
//! let cfg = ReductionConfig::new(Scheme::Su2, 6, couplings);
//! let trace = run_reduction(&cfg)?;
//! println!("stopped at n = {} ({})", trace.n_min(), trace.stop);
//! # Ok::<(), ladder_reduce::Error>(())
//! ```

pub mod basis;
pub mod eigensolver;
pub mod error;
pub mod experiment;
pub mod hamiltonian;
pub mod observables;
pub mod reduction;
pub mod sparse;

pub use basis::{
    build_basis, build_so4_basis, build_su2_basis, order_by_diagonal, rung_transform, Basis,
    RungConfiguration, RungState, Scheme, SpinConfiguration,
};
pub use eigensolver::{
    dense_lowest, lanczos_lowest, lanczos_lowest_from, EigenSolution, SolverConfig,
};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, RunSummary};
pub use hamiltonian::{
    assemble, assemble_so4, assemble_su2, rung_operators, CouplingSet, RungOperators,
    SplitHamiltonian,
};
pub use observables::{deviation_p, entropy_per_site, relevant_amplitudes, ObservableRecord};
pub use reduction::{
    detect_instability, feshbach_coefficients, run_reduction, run_reduction_with,
    solve_renormalization, Elimination, Flags, Reducer, ReductionConfig, ReductionStep,
    ReductionTrace, RenormalizationInputs, StopReason, StopRules,
};
