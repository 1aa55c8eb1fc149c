//! Step-by-step elimination of basis states with renormalization of the
//! coupling `g` so that the ground-state energy stays at its full-space
//! value.
//!
//! At each step the state with the largest diagonal energy is removed.
//! Writing `φ` for the normalized projection of the ground vector onto the
//! kept states and `e` for the removed state, the new coupling `g'` solves
//!
//! ```text
//! (A0 + g'A1)(λ - d0 - g'd1) + (v0 + g'v1)² = λ (λ - d0 - g'd1)
//! ```
//!
//! with `A = ⟨φ|H|φ⟩`, `v = ⟨φ|H|e⟩`, `d = ⟨e|H|e⟩` split into their `H0`
//! and `H1` parts. This is the condition that `⟨φ|H_eff(λ)|φ⟩ = λ` for the
//! one-state Feshbach effective Hamiltonian, a quadratic in `g'`; the root
//! closest to the current coupling is taken.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{build_basis, order_by_diagonal, Basis, Scheme};
use crate::eigensolver::{lanczos_lowest, lanczos_lowest_from, EigenSolution, SolverConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble, CouplingSet, SplitHamiltonian};
use crate::observables::{
    deviation_p, energy_per_site, entropy_per_site, relevant_amplitudes, DEFAULT_RELEVANCE,
};

/// Number of eigenvalues carried in every trace row.
pub const TRACE_LEVELS: usize = 4;

/// Per-step condition flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Flags(u8);

impl Flags {
    pub const NO_REAL_ROOT: Flags = Flags(1);
    pub const INSTABILITY: Flags = Flags(1 << 1);
    pub const WARM_START_FAILED: Flags = Flags(1 << 2);
    pub const INDETERMINATE: Flags = Flags(1 << 3);
    pub const DEGENERATE_PROJECTION: Flags = Flags(1 << 4);
    pub const DEGENERATE_SPECTRUM: Flags = Flags(1 << 5);
    pub const SOLVER_FAILED: Flags = Flags(1 << 6);

    const NAMES: [(Flags, &'static str); 7] = [
        (Flags::NO_REAL_ROOT, "no-real-root"),
        (Flags::INSTABILITY, "instability"),
        (Flags::WARM_START_FAILED, "warm-start-failed"),
        (Flags::INDETERMINATE, "indeterminate"),
        (Flags::DEGENERATE_PROJECTION, "degenerate-projection"),
        (Flags::DEGENERATE_SPECTRUM, "degenerate-spectrum"),
        (Flags::SOLVER_FAILED, "solver-failed"),
    ];

    pub fn empty() -> Self {
        Flags(0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: Flags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: Flags) {
        self.0 |= other.0;
    }

    /// Whether the renormalization of this step fell back to the previous
    /// coupling.
    pub fn renormalization_failed(self) -> bool {
        self.0 & (Flags::NO_REAL_ROOT.0 | Flags::INDETERMINATE.0 | Flags::DEGENERATE_PROJECTION.0)
            != 0
    }
}

impl std::ops::BitOr for Flags {
    type Output = Flags;

    fn bitor(self, rhs: Flags) -> Flags {
        Flags(self.0 | rhs.0)
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in Flags::NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str(";")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Scalars entering the renormalization condition for one elimination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenormalizationInputs {
    /// Target ground energy λ.
    pub lambda: f64,
    /// `⟨e|H0|e⟩`, `⟨e|H1|e⟩`
    pub d0: f64,
    pub d1: f64,
    /// `⟨φ|H0|φ⟩`, `⟨φ|H1|φ⟩` on the kept states.
    pub a0: f64,
    pub a1: f64,
    /// `⟨φ|H0|e⟩`, `⟨φ|H1|e⟩`
    pub v0: f64,
    pub v1: f64,
    pub g_prev: f64,
}

/// `α g² + β g + γ`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Quadratic {
    pub fn eval(&self, g: f64) -> f64 {
        (self.alpha * g + self.beta) * g + self.gamma
    }

    /// Scale against which a residual `eval(g)` is judged.
    pub fn magnitude_at(&self, g: f64) -> f64 {
        (self.alpha * g * g)
            .abs()
            .max((self.beta * g).abs())
            .max(self.gamma.abs())
            .max(1.0)
    }
}

impl RenormalizationInputs {
    pub fn quadratic(&self) -> Quadratic {
        let Self {
            lambda,
            d0,
            d1,
            a0,
            a1,
            v0,
            v1,
            ..
        } = *self;
        Quadratic {
            alpha: v1 * v1 - a1 * d1,
            beta: 2.0 * v0 * v1 + a1 * (lambda - d0) - a0 * d1 + lambda * d1,
            gamma: v0 * v0 + (a0 - lambda) * (lambda - d0),
        }
    }
}

/// Gathers the renormalization scalars for eliminating state `elim` given
/// the current ground vector `psi`. Costs two sparse products.
pub fn feshbach_coefficients(
    h: &SplitHamiltonian,
    psi: &[f64],
    lambda: f64,
    elim: usize,
) -> Result<RenormalizationInputs> {
    let n = h.dim();
    if psi.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: psi.len(),
        });
    }
    if elim >= n {
        return Err(Error::IndexOutOfRange {
            index: elim,
            dim: n,
        });
    }
    let total: f64 = psi.iter().map(|a| a * a).sum();
    let kept = (total - psi[elim] * psi[elim]).max(0.0).sqrt();
    if kept <= f64::EPSILON * total.sqrt() || kept == 0.0 {
        return Err(Error::DegenerateProjection);
    }
    let mut phi: Vec<f64> = psi.iter().map(|a| a / kept).collect();
    phi[elim] = 0.0;

    let mut h0_phi = vec![0.0; n];
    let mut h1_phi = vec![0.0; n];
    h.h0().mul_add(&phi, 1.0, &mut h0_phi);
    h.h1().mul_add(&phi, 1.0, &mut h1_phi);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    Ok(RenormalizationInputs {
        lambda,
        d0: h.h0().get(elim, elim),
        d1: h.h1().get(elim, elim),
        a0: dot(&phi, &h0_phi),
        a1: dot(&phi, &h1_phi),
        v0: h0_phi[elim],
        v1: h1_phi[elim],
        g_prev: h.coupling(),
    })
}

/// Solves the renormalization quadratic, returning the real root closest
/// to `g_prev` (the smaller one on an exact tie). Falls back to `g_prev`
/// with a flag when there is no real root or the equation is degenerate.
pub fn solve_renormalization(inputs: &RenormalizationInputs) -> (f64, Flags) {
    let q = inputs.quadratic();
    let g_prev = inputs.g_prev;
    let coeffs = [q.alpha, q.beta, q.gamma];
    if coeffs.iter().any(|c| !c.is_finite()) {
        return (g_prev, Flags::INDETERMINATE);
    }
    let size = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if size <= 1e-14 * inputs.lambda.powi(2).max(1.0) {
        return (g_prev, Flags::INDETERMINATE);
    }

    if q.alpha.abs() < 1e-14 * q.beta.abs().max(1.0) {
        if q.beta.abs() <= 1e-14 * size {
            return (g_prev, Flags::INDETERMINATE);
        }
        return (-q.gamma / q.beta, Flags::empty());
    }

    let disc = q.beta * q.beta - 4.0 * q.alpha * q.gamma;
    if disc < 0.0 {
        return (g_prev, Flags::NO_REAL_ROOT);
    }
    let s = disc.sqrt();
    let t = -0.5 * (q.beta + if q.beta >= 0.0 { s } else { -s });
    let r1 = t / q.alpha;
    let r2 = if t != 0.0 { q.gamma / t } else { r1 };
    let (d1, d2) = ((r1 - g_prev).abs(), (r2 - g_prev).abs());
    let root = if d1 < d2 || (d1 == d2 && r1 <= r2) {
        r1
    } else {
        r2
    };
    (root, Flags::empty())
}

/// Which state is removed at each step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Elimination {
    /// Largest diagonal energy (ties: latest in the current order).
    #[default]
    Diagonal,
    /// Smallest ground-state amplitude magnitude. Experimental.
    Amplitude,
}

impl std::str::FromStr for Elimination {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "diagonal" => Ok(Elimination::Diagonal),
            "amplitude" => Ok(Elimination::Amplitude),
            other => Err(format!(
                "unknown elimination order '{other}' (expected diagonal or amplitude)"
            )),
        }
    }
}

/// Thresholds that end a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRules {
    /// Stop once the dimension has reached this value.
    pub n_floor: usize,
    /// Largest tolerated ground-state deviation p(1), in percent.
    pub p1_abort: f64,
    /// Largest tolerated single-step factor |g' / g| (or its inverse).
    pub g_jump_abort: f64,
    /// Consecutive steps without a real root that count as unstable.
    pub no_root_run: usize,
}

impl Default for StopRules {
    fn default() -> Self {
        Self {
            n_floor: 8,
            p1_abort: 5.0,
            g_jump_abort: 10.0,
            no_root_run: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionConfig {
    pub scheme: Scheme,
    pub rungs: usize,
    pub m_tot: i32,
    pub couplings: CouplingSet,
    pub solver: SolverConfig,
    /// Relevance threshold ε for the amplitude census.
    pub epsilon: f64,
    pub stop: StopRules,
    /// Target ground energy; the full-space value when `None`.
    pub lambda_target: Option<f64>,
    pub elimination: Elimination,
    /// Seed each solve with the previous step's projected eigenvectors.
    pub warm_start: bool,
}

impl ReductionConfig {
    pub fn new(scheme: Scheme, rungs: usize, couplings: CouplingSet) -> Self {
        Self {
            scheme,
            rungs,
            m_tot: 0,
            couplings,
            solver: SolverConfig::default(),
            epsilon: DEFAULT_RELEVANCE,
            stop: StopRules::default(),
            lambda_target: None,
            elimination: Elimination::Diagonal,
            warm_start: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSolverConfig(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("epsilon", self.epsilon)?;
        positive("p1_abort", self.stop.p1_abort)?;
        positive("g_jump_abort", self.stop.g_jump_abort)?;
        if self.stop.n_floor == 0 {
            return Err(Error::InvalidSolverConfig(
                "n_floor must be at least 1".into(),
            ));
        }
        if self.stop.no_root_run == 0 {
            return Err(Error::InvalidSolverConfig(
                "no_root_run must be at least 1".into(),
            ));
        }
        if let Some(l) = self.lambda_target {
            if !l.is_finite() || l == 0.0 {
                return Err(Error::InvalidSolverConfig(format!(
                    "lambda_target must be finite and nonzero, got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// One row of a reduction trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionStep {
    /// Dimension of the space this row was computed in.
    pub n: usize,
    /// Coupling in that space.
    pub g: f64,
    /// Lowest eigenvalues, ascending.
    pub lambdas: Vec<f64>,
    /// Energies per site `λ_i / 2L`.
    pub energies: Vec<f64>,
    /// Percentage deviations from the full-space energies.
    pub deviations: Vec<f64>,
    /// Amplitude entropy per site of the ground state.
    pub entropy: f64,
    pub relevant_count: usize,
    pub flags: Flags,
    /// Ground-state amplitude of the state removed to reach this space
    /// (zero for the full space).
    pub eliminated_amplitude: f64,
    /// Krylov dimension used by the solve.
    pub iterations: usize,
}

impl ReductionStep {
    pub fn p1(&self) -> f64 {
        self.deviations[0]
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Instability,
    Floor,
    SolverFailure,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Instability => "instability",
            StopReason::Floor => "floor",
            StopReason::SolverFailure => "solver-failure",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTrace {
    pub initial_dim: usize,
    pub lambda_target: f64,
    pub steps: Vec<ReductionStep>,
    pub stop: StopReason,
}

impl ReductionTrace {
    /// Dimension of the last recorded space.
    pub fn n_min(&self) -> usize {
        self.steps.last().map_or(self.initial_dim, |s| s.n)
    }

    pub fn final_coupling(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.g)
    }

    pub fn initial_entropy(&self) -> f64 {
        self.steps[0].entropy
    }

    /// Largest p(i) over the rows preceding the last one.
    pub fn max_deviation_before_stop(&self) -> f64 {
        let upto = self.steps.len().saturating_sub(1);
        self.steps[..upto]
            .iter()
            .flat_map(|s| s.deviations.iter().copied())
            .filter(|p| p.is_finite())
            .fold(0.0, f64::max)
    }

    /// Dimension of the first row with `p(1) > threshold`.
    pub fn first_exceeding(&self, threshold: f64) -> Option<usize> {
        self.steps.iter().find(|s| s.p1() > threshold).map(|s| s.n)
    }

    /// Smallest dimension reached while `p(1) ≤ threshold` held on every
    /// row so far.
    pub fn deepest_stable_n(&self, threshold: f64) -> usize {
        self.steps
            .iter()
            .take_while(|s| s.p1() <= threshold)
            .last()
            .map_or(self.initial_dim, |s| s.n)
    }

    pub fn row_at(&self, n: usize) -> Option<&ReductionStep> {
        self.steps.iter().find(|s| s.n == n)
    }

    pub fn count_flag(&self, flag: Flags) -> usize {
        self.steps.iter().filter(|s| s.flags.contains(flag)).count()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write_trace_header(&mut w)?;
        for s in &self.steps {
            write_trace_row(&mut w, s)?;
        }
        Ok(())
    }
}

pub const TRACE_COLUMNS: [&str; 17] = [
    "n",
    "g",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda4",
    "e1",
    "e2",
    "e3",
    "e4",
    "p1",
    "p2",
    "p3",
    "p4",
    "entropy",
    "relevant_count",
    "flags",
];

pub fn write_trace_header<W: Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{}", TRACE_COLUMNS.join(","))
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn levels(values: &[f64]) -> String {
    (0..TRACE_LEVELS)
        .map(|i| values.get(i).map_or(String::new(), |v| real(*v)))
        .collect::<Vec<_>>()
        .join(",")
}

pub fn write_trace_row<W: Write>(w: &mut W, s: &ReductionStep) -> std::io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        s.n,
        real(s.g),
        levels(&s.lambdas),
        levels(&s.energies),
        levels(&s.deviations),
        real(s.entropy),
        s.relevant_count,
        s.flags
    )
}

/// Whether the latest row of `steps` trips a stop rule: p(1) above its
/// limit, a coupling jump (or sign change) beyond the allowed factor, or a
/// run of steps without a real root.
pub fn detect_instability(steps: &[ReductionStep], rules: &StopRules) -> bool {
    let Some(last) = steps.last() else {
        return false;
    };
    if last.p1() > rules.p1_abort {
        return true;
    }
    if let [.., prev, last] = steps {
        let ratio = last.g / prev.g;
        if ratio.is_nan()
            || ratio <= 0.0
            || ratio > rules.g_jump_abort
            || ratio < 1.0 / rules.g_jump_abort
        {
            return true;
        }
    }
    steps.len() >= rules.no_root_run
        && steps[steps.len() - rules.no_root_run..]
            .iter()
            .all(|s| s.flags.contains(Flags::NO_REAL_ROOT))
}

/// Mutable state of a reduction run over an already ordered Hamiltonian.
pub struct Reducer {
    h: SplitHamiltonian,
    rungs: usize,
    solver: SolverConfig,
    epsilon: f64,
    elimination: Elimination,
    warm_start: bool,
    lambda: f64,
    reference: Vec<f64>,
    solution: EigenSolution,
    rng: ChaCha8Rng,
}

impl Reducer {
    /// Solves the full problem and records the first row. `rungs` sets the
    /// per-site normalization `2L`.
    pub fn new(
        h: SplitHamiltonian,
        rungs: usize,
        cfg: &ReductionConfig,
    ) -> Result<(Self, ReductionStep)> {
        cfg.validate()?;
        let solution = solve(&h, &cfg.solver)?;
        let lambda = cfg.lambda_target.unwrap_or(solution.values[0]);
        let reference: Vec<f64> = solution
            .values
            .iter()
            .take(TRACE_LEVELS)
            .map(|&l| energy_per_site(l, rungs))
            .collect();
        let reducer = Self {
            h,
            rungs,
            solver: cfg.solver.clone(),
            epsilon: cfg.epsilon,
            elimination: cfg.elimination,
            warm_start: cfg.warm_start,
            lambda,
            reference,
            solution,
            rng: ChaCha8Rng::seed_from_u64(cfg.solver.seed ^ 0x9e37_79b9_7f4a_7c15),
        };
        let mut flags = Flags::empty();
        if reducer.solution.degenerate {
            flags.insert(Flags::DEGENERATE_SPECTRUM);
        }
        let first = reducer.record(flags, 0.0)?;
        Ok((reducer, first))
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn hamiltonian(&self) -> &SplitHamiltonian {
        &self.h
    }

    pub fn solution(&self) -> &EigenSolution {
        &self.solution
    }

    pub fn lambda_target(&self) -> f64 {
        self.lambda
    }

    /// Index of the state removed next.
    pub fn next_elimination(&self) -> usize {
        let key: Vec<f64> = match self.elimination {
            Elimination::Diagonal => self.h.diagonal(),
            Elimination::Amplitude => self.solution.vectors[0].iter().map(|a| -a.abs()).collect(),
        };
        let mut best = 0;
        for (i, k) in key.iter().enumerate() {
            if *k >= key[best] {
                best = i;
            }
        }
        best
    }

    /// Removes one state, renormalizes `g` and re-solves. A solver failure
    /// is reported through [`Flags::SOLVER_FAILED`] on the returned row.
    pub fn step(&mut self) -> Result<ReductionStep> {
        if self.h.dim() < 2 {
            return Err(Error::EmptyKeep);
        }
        let elim = self.next_elimination();
        let psi = &self.solution.vectors[0];
        let amplitude = psi[elim];
        let mut flags = Flags::empty();
        let g_new = match feshbach_coefficients(&self.h, psi, self.lambda, elim) {
            Ok(inputs) => {
                let (g, f) = solve_renormalization(&inputs);
                flags.insert(f);
                g
            }
            Err(Error::DegenerateProjection) => {
                flags.insert(Flags::DEGENERATE_PROJECTION);
                self.h.coupling()
            }
            Err(e) => return Err(e),
        };

        let warm: Option<Vec<f64>> = self.warm_start.then(|| self.warm_vector(elim));
        self.h = self.h.without(elim)?.with_coupling(g_new);

        let first_try = match &warm {
            Some(v) => lanczos_lowest_from(
                self.h.dim(),
                |x, y| self.h.apply(x, y),
                &self.solver,
                Some(v),
            ),
            None => solve(&self.h, &self.solver),
        };
        self.solution = match first_try {
            Ok(sol) => sol,
            Err(Error::NotConverged { .. }) if warm.is_some() => {
                flags.insert(Flags::WARM_START_FAILED);
                match solve(&self.h, &self.solver) {
                    Ok(sol) => sol,
                    Err(Error::NotConverged { best, .. }) => {
                        flags.insert(Flags::SOLVER_FAILED);
                        *best
                    }
                    Err(e) => return Err(e),
                }
            }
            Err(Error::NotConverged { best, .. }) => {
                flags.insert(Flags::SOLVER_FAILED);
                *best
            }
            Err(e) => return Err(e),
        };
        if self.solution.degenerate {
            flags.insert(Flags::DEGENERATE_SPECTRUM);
        }
        self.record(flags, amplitude)
    }

    /// Projected previous eigenvectors plus a small random admixture, with
    /// state `elim` dropped.
    fn warm_vector(&mut self, elim: usize) -> Vec<f64> {
        let n = self.h.dim();
        let mut v = vec![0.0; n - 1];
        for vec in &self.solution.vectors {
            let kept = vec
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != elim)
                .map(|(_, a)| a);
            for (dst, a) in v.iter_mut().zip(kept) {
                *dst += a;
            }
        }
        let scale = 1e-2 / ((n - 1) as f64).sqrt();
        for x in v.iter_mut() {
            *x += scale * (self.rng.gen::<f64>() - 0.5);
        }
        v
    }

    fn record(&self, flags: Flags, eliminated_amplitude: f64) -> Result<ReductionStep> {
        let lambdas: Vec<f64> = self
            .solution
            .values
            .iter()
            .take(TRACE_LEVELS)
            .copied()
            .collect();
        let energies: Vec<f64> = lambdas
            .iter()
            .map(|&l| energy_per_site(l, self.rungs))
            .collect();
        let deviations = energies
            .iter()
            .zip(&self.reference)
            .map(|(&e, &r)| deviation_p(r, e))
            .collect::<Result<Vec<_>>>()?;
        let ground = &self.solution.vectors[0];
        Ok(ReductionStep {
            n: self.h.dim(),
            g: self.h.coupling(),
            lambdas,
            energies,
            deviations,
            entropy: entropy_per_site(ground, self.rungs)?,
            relevant_count: relevant_amplitudes(ground, self.epsilon),
            flags,
            eliminated_amplitude,
            iterations: self.solution.iterations,
        })
    }
}

fn solve(h: &SplitHamiltonian, cfg: &SolverConfig) -> Result<EigenSolution> {
    lanczos_lowest(h.dim(), |x, y| h.apply(x, y), cfg)
}

/// Builds the ladder in the configured scheme and orders its basis by
/// diagonal energy. Returns the ordered basis and matching Hamiltonian.
pub fn prepare(cfg: &ReductionConfig) -> Result<(Basis, SplitHamiltonian)> {
    let basis = build_basis(cfg.scheme, cfg.rungs, cfg.m_tot)?;
    let h = assemble(&basis, &cfg.couplings)?;
    let (ordered, perm) = order_by_diagonal(&basis, &h.diagonal())?;
    let h = h.restrict(&perm)?;
    Ok((ordered, h))
}

/// Runs a reduction to completion, handing each row to `on_step` as soon
/// as it is computed.
pub fn run_reduction_with<F>(cfg: &ReductionConfig, mut on_step: F) -> Result<ReductionTrace>
where
    F: FnMut(&ReductionStep) -> std::io::Result<()>,
{
    cfg.validate()?;
    let (_, h) = prepare(cfg)?;
    let initial_dim = h.dim();
    let (mut reducer, first) = Reducer::new(h, cfg.rungs, cfg)?;
    on_step(&first)?;
    let mut steps = vec![first];

    let stop = loop {
        if steps.last().unwrap().flags.contains(Flags::SOLVER_FAILED) {
            break StopReason::SolverFailure;
        }
        if reducer.dim() <= cfg.stop.n_floor.max(1) {
            break StopReason::Floor;
        }
        let mut row = reducer.step()?;
        steps.push(row.clone());
        let unstable = detect_instability(&steps, &cfg.stop);
        if unstable {
            row.flags.insert(Flags::INSTABILITY);
            steps.last_mut().unwrap().flags = row.flags;
        }
        on_step(&row)?;
        if unstable {
            break StopReason::Instability;
        }
    };

    Ok(ReductionTrace {
        initial_dim,
        lambda_target: reducer.lambda_target(),
        steps,
        stop,
    })
}

pub fn run_reduction(cfg: &ReductionConfig) -> Result<ReductionTrace> {
    run_reduction_with(cfg, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SymCsr;

    fn inputs(
        q: (f64, f64, f64, f64, f64, f64, f64),
        lambda: f64,
        g_prev: f64,
    ) -> RenormalizationInputs {
        let (d0, d1, a0, a1, v0, v1, _) = q;
        RenormalizationInputs {
            lambda,
            d0,
            d1,
            a0,
            a1,
            v0,
            v1,
            g_prev,
        }
    }

    #[test]
    fn decoupled_unoccupied_keeps_coupling() {
        // H0 = 0, v = 0, A1 g = λ.
        let g = 3.0;
        let a1 = -1.7;
        let inp = inputs((0.0, 2.5, 0.0, a1, 0.0, 0.0, 0.0), a1 * g, g);
        let (root, flags) = solve_renormalization(&inp);
        assert!(flags.is_empty());
        assert!((root - g).abs() <= 1e-12 * g);
    }

    #[test]
    fn no_real_root_keeps_coupling() {
        // α g² + γ with α, γ > 0: α = v1² - A1 d1, γ = v0² + (A0-λ)(λ-d0).
        let inp = RenormalizationInputs {
            lambda: 0.0,
            d0: 0.0,
            d1: 0.0,
            a0: 0.0,
            a1: 0.0,
            v0: 1.0,
            v1: 1.0,
            g_prev: 2.0,
        };
        // α = 1, β = 2, γ = 1 → double root at -1 (real).
        let (root, flags) = solve_renormalization(&inp);
        assert!(flags.is_empty());
        assert!((root + 1.0).abs() < 1e-7);

        let inp = RenormalizationInputs {
            v0: 0.0,
            a0: 1.0,
            lambda: 0.5,
            ..inp
        };
        // α = 1, β = 0, γ = (1 - 0.5)·0.5 = 0.25 → disc = -1 < 0.
        let (root, flags) = solve_renormalization(&inp);
        assert_eq!(root, 2.0);
        assert!(flags.contains(Flags::NO_REAL_ROOT));
    }

    #[test]
    fn linear_and_indeterminate_cases() {
        let inp = RenormalizationInputs {
            lambda: -2.0,
            d0: 0.0,
            d1: 0.0,
            a0: 0.0,
            a1: -1.0,
            v0: 0.0,
            v1: 0.0,
            g_prev: 1.0,
        };
        // α = 0, β = A1 λ = 2, γ = -λ² = -4 → g = 2.
        let (root, flags) = solve_renormalization(&inp);
        assert!(flags.is_empty());
        assert!((root - 2.0).abs() < 1e-15);

        let zero = RenormalizationInputs {
            lambda: 0.0,
            a1: 0.0,
            ..inp
        };
        let (root, flags) = solve_renormalization(&zero);
        assert_eq!(root, 1.0);
        assert!(flags.contains(Flags::INDETERMINATE));
    }

    #[test]
    fn closest_root_tie_takes_smaller() {
        // (g - 1)(g - 3) = g² - 4g + 3 with g_prev = 2; H0 terms only.
        // α = v1² - A1 d1 = 1 with v1 = 1; choose β, γ via v0, d0, a0, λ.
        let inp = RenormalizationInputs {
            lambda: 0.0,
            d0: 0.0,
            d1: 0.0,
            a0: 0.0,
            a1: 0.0,
            v0: -2.0,
            v1: 1.0,
            g_prev: 2.0,
        };
        // β = 2 v0 v1 = -4, γ = v0² = 4 → double root 2; adjust γ via a0, d0, λ.
        let inp = RenormalizationInputs {
            a0: 1.0,
            d0: 1.0,
            lambda: 2.0,
            ..inp
        };
        let q = inp.quadratic();
        // β = -4 + 0 - 0 + 0 = -4 (d1 = 0, a1 = 0), γ = 4 + (1 - 2)(2 - 1) = 3.
        assert_eq!((q.alpha, q.beta, q.gamma), (1.0, -4.0, 3.0));
        let (root, _) = solve_renormalization(&inp);
        assert_eq!(root, 1.0);
    }

    #[test]
    fn flags_display() {
        let f = Flags::NO_REAL_ROOT | Flags::INSTABILITY;
        assert_eq!(f.to_string(), "no-real-root;instability");
        assert_eq!(Flags::empty().to_string(), "");
        assert!(f.renormalization_failed());
        assert!(!Flags::WARM_START_FAILED.renormalization_failed());
    }

    fn row(n: usize, g: f64, p1: f64, flags: Flags) -> ReductionStep {
        ReductionStep {
            n,
            g,
            lambdas: vec![-1.0],
            energies: vec![-0.5],
            deviations: vec![p1],
            entropy: 0.1,
            relevant_count: 1,
            flags,
            eliminated_amplitude: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn instability_rules() {
        let rules = StopRules::default();
        let flat: Vec<_> = (0..5)
            .map(|i| row(100 - i, 15.0, 0.1, Flags::empty()))
            .collect();
        assert!(!detect_instability(&flat, &rules));
        assert!(!detect_instability(&[], &rules));

        let mut jump = flat.clone();
        jump.push(row(95, 750.0, 0.1, Flags::empty()));
        assert!(detect_instability(&jump, &rules));

        let mut drop = flat.clone();
        drop.push(row(95, 1.0, 0.1, Flags::empty()));
        assert!(detect_instability(&drop, &rules));

        let mut sign = flat.clone();
        sign.push(row(95, -15.0, 0.1, Flags::empty()));
        assert!(detect_instability(&sign, &rules));

        let mut p = flat.clone();
        p.push(row(95, 15.0, 5.5, Flags::empty()));
        assert!(detect_instability(&p, &rules));

        let mut roots = flat.clone();
        roots.push(row(95, 15.0, 0.1, Flags::NO_REAL_ROOT));
        roots.push(row(94, 15.0, 0.1, Flags::NO_REAL_ROOT));
        assert!(!detect_instability(&roots, &rules));
        roots.push(row(93, 15.0, 0.1, Flags::NO_REAL_ROOT));
        assert!(detect_instability(&roots, &rules));
    }

    #[test]
    fn trace_summaries() {
        let steps = vec![
            row(10, 1.0, 0.0, Flags::empty()),
            row(9, 1.0, 0.5, Flags::empty()),
            row(8, 1.0, 1.5, Flags::empty()),
            row(7, 1.0, 0.2, Flags::empty()),
            row(6, 1.0, 7.0, Flags::INSTABILITY),
        ];
        let trace = ReductionTrace {
            initial_dim: 10,
            lambda_target: -1.0,
            steps,
            stop: StopReason::Instability,
        };
        assert_eq!(trace.n_min(), 6);
        assert_eq!(trace.deepest_stable_n(1.0), 9);
        assert_eq!(trace.first_exceeding(1.0), Some(8));
        assert_eq!(trace.max_deviation_before_stop(), 1.5);
        assert_eq!(trace.count_flag(Flags::INSTABILITY), 1);
    }

    #[test]
    fn csv_row_format() {
        let mut r = row(3, 15.0, 0.0, Flags::NO_REAL_ROOT);
        r.lambdas = vec![-1.5, -0.5];
        r.energies = vec![-0.75, -0.25];
        r.deviations = vec![0.0, 1.0];
        let mut out = Vec::new();
        write_trace_row(&mut out, &r).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "3,1.5000000000000000e1,-1.5000000000000000e0,-5.0000000000000000e-1,,,\
             -7.5000000000000000e-1,-2.5000000000000000e-1,,,\
             0.0000000000000000e0,1.0000000000000000e0,,,\
             1.0000000000000001e-1,1,no-real-root\n"
        );
    }

    #[test]
    fn feshbach_with_zero_h0() {
        let h1 = SymCsr::from_triplets(
            3,
            vec![
                (0, 0, -1.0),
                (0, 1, 0.3),
                (1, 1, 0.5),
                (1, 2, 0.2),
                (2, 2, 2.0),
            ],
        );
        let h = SplitHamiltonian::new(SymCsr::zeros(3), h1, 2.0).unwrap();
        let psi = [0.9, 0.4, 0.1f64];
        let norm = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
        let psi: Vec<f64> = psi.iter().map(|a| a / norm).collect();
        let inp = feshbach_coefficients(&h, &psi, -2.0, 2).unwrap();
        assert_eq!((inp.a0, inp.v0, inp.d0), (0.0, 0.0, 0.0));
        assert_eq!(inp.d1, 2.0);
        assert_eq!(inp.g_prev, 2.0);
        // φ = (0.9, 0.4, 0) / ‖·‖
        let k = (0.81f64 + 0.16).sqrt();
        let (p0, p1) = (0.9 / k, 0.4 / k);
        assert!((inp.a1 - (-p0 * p0 + 2.0 * 0.3 * p0 * p1 + 0.5 * p1 * p1)).abs() < 1e-14);
        assert!((inp.v1 - 0.2 * p1).abs() < 1e-14);

        let mut unit = vec![0.0; 3];
        unit[2] = 1.0;
        assert!(matches!(
            feshbach_coefficients(&h, &unit, -2.0, 2),
            Err(Error::DegenerateProjection)
        ));
        assert!(feshbach_coefficients(&h, &psi, -2.0, 3).is_err());
    }

    #[test]
    fn reduction_config_validation() {
        let c = CouplingSet::new(1.0, 1.0, 1.0).unwrap();
        let mut cfg = ReductionConfig::new(Scheme::Su2, 2, c);
        assert!(cfg.validate().is_ok());
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_err());
        cfg.epsilon = 1e-2;
        cfg.stop.n_floor = 0;
        assert!(cfg.validate().is_err());
    }
}
