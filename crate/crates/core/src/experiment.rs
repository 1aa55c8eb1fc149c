//! Experiment files and the `run`, `spectrum` and `sweep` drivers.
//!
//! An experiment file is flat `key = value` text; `#` starts a comment.
//!
//! ```text
//! scheme = su2        # su2 | so4
//! L = 6
//! J_t = 15
//! J_l = 5
//! J_c = 3
//! output = fig2.csv
//! ```
//!
//! Optional keys: `M_tot`, `k`, `tol`, `max_iter`, `seed`,
//! `dense_threshold`, `epsilon`, `n_floor`, `p1_abort`, `g_jump_abort`,
//! `lambda_target`, `elimination` (`diagonal` | `amplitude`), `warm_start`.
//! Unknown or repeated keys are rejected.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::basis::{build_so4_basis, build_su2_basis, Scheme};
use crate::eigensolver::{lanczos_lowest, SolverConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble_so4, assemble_su2, CouplingSet};
use crate::reduction::{
    run_reduction_with, write_trace_header, write_trace_row, Elimination, ReductionConfig,
    ReductionTrace, StopReason, StopRules,
};

/// Environment variable holding the worker count for sweeps.
pub const THREADS_ENV: &str = "LADDER_REDUCE_THREADS";

const KEYS: [&str; 19] = [
    "scheme",
    "L",
    "J_t",
    "J_l",
    "J_c",
    "M_tot",
    "k",
    "tol",
    "max_iter",
    "seed",
    "dense_threshold",
    "epsilon",
    "n_floor",
    "p1_abort",
    "g_jump_abort",
    "lambda_target",
    "elimination",
    "warm_start",
    "output",
];

const REQUIRED: [&str; 5] = ["scheme", "L", "J_t", "J_l", "J_c"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub rungs: usize,
    pub rung_coupling: f64,
    pub leg_coupling: f64,
    pub diagonal_coupling: f64,
    pub m_tot: i32,
    pub solver: SolverConfig,
    pub epsilon: f64,
    pub stop: StopRules,
    pub lambda_target: Option<f64>,
    pub elimination: Elimination,
    pub warm_start: bool,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses experiment text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Config {
            path: origin.to_string(),
            line,
            msg,
        };
        let defaults = ReductionConfig::new(
            Scheme::Su2,
            1,
            CouplingSet::new(1.0, 1.0, 1.0).expect("unit couplings are valid"),
        );
        let mut cfg = ExperimentConfig {
            scheme: Scheme::Su2,
            rungs: 0,
            rung_coupling: 0.0,
            leg_coupling: 0.0,
            diagonal_coupling: 0.0,
            m_tot: 0,
            solver: defaults.solver,
            epsilon: defaults.epsilon,
            stop: defaults.stop,
            lambda_target: None,
            elimination: Elimination::Diagonal,
            warm_start: true,
            output: None,
        };
        let mut seen: Vec<&str> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line_no, format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&key) = KEYS.iter().find(|k| **k == key) else {
                return Err(err(line_no, format!("unknown key '{key}'")));
            };
            if seen.contains(&key) {
                return Err(err(line_no, format!("duplicate key '{key}'")));
            }
            seen.push(key);

            fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse::<T>().map_err(|_| format!("invalid value '{v}'"))
            }
            let parsed: std::result::Result<(), String> = (|| {
                match key {
                    "scheme" => cfg.scheme = value.parse()?,
                    "L" => cfg.rungs = num(value)?,
                    "J_t" => cfg.rung_coupling = num(value)?,
                    "J_l" => cfg.leg_coupling = num(value)?,
                    "J_c" => cfg.diagonal_coupling = num(value)?,
                    "M_tot" => cfg.m_tot = num(value)?,
                    "k" => cfg.solver.k = num(value)?,
                    "tol" => cfg.solver.tol = num(value)?,
                    "max_iter" => cfg.solver.max_iter = num(value)?,
                    "seed" => cfg.solver.seed = num(value)?,
                    "dense_threshold" => cfg.solver.dense_threshold = num(value)?,
                    "epsilon" => cfg.epsilon = num(value)?,
                    "n_floor" => cfg.stop.n_floor = num(value)?,
                    "p1_abort" => cfg.stop.p1_abort = num(value)?,
                    "g_jump_abort" => cfg.stop.g_jump_abort = num(value)?,
                    "lambda_target" => cfg.lambda_target = Some(num(value)?),
                    "elimination" => cfg.elimination = value.parse()?,
                    "warm_start" => cfg.warm_start = num(value)?,
                    "output" => cfg.output = Some(PathBuf::from(value)),
                    _ => unreachable!("key list and match arms agree"),
                }
                Ok(())
            })();
            parsed.map_err(|m| err(line_no, format!("{key}: {m}")))?;
        }

        for key in REQUIRED {
            if !seen.contains(&key) {
                return Err(err(0, format!("missing required key '{key}'")));
            }
        }
        cfg.reduction_config().map_err(|e| err(0, e.to_string()))?;
        Ok(cfg)
    }

    pub fn couplings(&self) -> Result<CouplingSet> {
        CouplingSet::new(
            self.rung_coupling,
            self.leg_coupling,
            self.diagonal_coupling,
        )
    }

    pub fn reduction_config(&self) -> Result<ReductionConfig> {
        if self.rungs == 0 || self.rungs > 16 {
            return Err(Error::EmptySector {
                sites: self.rungs,
                m_tot: self.m_tot,
            });
        }
        let cfg = ReductionConfig {
            scheme: self.scheme,
            rungs: self.rungs,
            m_tot: self.m_tot,
            couplings: self.couplings()?,
            solver: self.solver.clone(),
            epsilon: self.epsilon,
            stop: self.stop,
            lambda_target: self.lambda_target,
            elimination: self.elimination,
            warm_start: self.warm_start,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Copy with a different rung coupling and a matching output name.
    pub fn with_rung_coupling(&self, rung: f64) -> Self {
        let mut cfg = self.clone();
        cfg.rung_coupling = rung;
        cfg.output = Some(sweep_output(self.output.as_deref(), rung));
        cfg
    }
}

fn sweep_output(base: Option<&Path>, rung: f64) -> PathBuf {
    let base = base.unwrap_or(Path::new("sweep.csv"));
    let stem = base
        .file_stem()
        .map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
    base.with_file_name(format!("{stem}_jt{rung}.csv"))
}

/// Headline numbers of one reduction run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub initial_dim: usize,
    pub initial_lambda: f64,
    pub lambda_target: f64,
    pub n_min: usize,
    pub final_coupling: f64,
    pub max_deviation: f64,
    pub initial_entropy: f64,
    /// Smallest dimension reached with p(1) ≤ 1 % on every row so far.
    pub deepest_within_one_percent: usize,
    pub stop: StopReason,
}

impl RunSummary {
    pub fn from_trace(trace: &ReductionTrace) -> Self {
        Self {
            initial_dim: trace.initial_dim,
            initial_lambda: trace.steps[0].lambdas[0],
            lambda_target: trace.lambda_target,
            n_min: trace.n_min(),
            final_coupling: trace.final_coupling(),
            max_deviation: trace.max_deviation_before_stop(),
            initial_entropy: trace.initial_entropy(),
            deepest_within_one_percent: trace.deepest_stable_n(1.0),
            stop: trace.stop,
        }
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N = {}", self.initial_dim)?;
        writeln!(f, "lambda1(N) = {:.16e}", self.initial_lambda)?;
        if self.lambda_target != self.initial_lambda {
            writeln!(f, "lambda_target = {:.16e}", self.lambda_target)?;
        }
        writeln!(f, "N_min = {}", self.n_min)?;
        writeln!(f, "final g = {:.16e}", self.final_coupling)?;
        writeln!(f, "max p(i) before N_min = {:.6}", self.max_deviation)?;
        writeln!(f, "stop = {}", self.stop)
    }
}

/// Runs one reduction, streaming trace rows as CSV into `csv`.
pub fn run_experiment<W: Write>(
    cfg: &ExperimentConfig,
    mut csv: W,
) -> Result<(ReductionTrace, RunSummary)> {
    let rcfg = cfg.reduction_config()?;
    write_trace_header(&mut csv)?;
    let trace = run_reduction_with(&rcfg, |row| write_trace_row(&mut csv, row))?;
    csv.flush()?;
    let summary = RunSummary::from_trace(&trace);
    Ok((trace, summary))
}

/// Runs one reduction writing the trace to `cfg.output`.
pub fn run_to_file(cfg: &ExperimentConfig) -> Result<(ReductionTrace, RunSummary)> {
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("trace.csv"));
    let file = BufWriter::new(File::create(&path)?);
    run_experiment(cfg, file)
}

/// Lowest levels of both schemes for the same ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub su2: Vec<f64>,
    pub so4: Vec<f64>,
    pub max_relative_difference: f64,
}

impl fmt::Display for SpectrumComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "i,su2,so4")?;
        for (i, (a, b)) in self.su2.iter().zip(&self.so4).enumerate() {
            writeln!(f, "{},{:.16e},{:.16e}", i + 1, a, b)?;
        }
        writeln!(
            f,
            "max relative difference = {:.3e}",
            self.max_relative_difference
        )
    }
}

pub fn spectrum(cfg: &ExperimentConfig, k: usize) -> Result<SpectrumComparison> {
    let couplings = cfg.couplings()?;
    let solver = SolverConfig {
        k,
        ..cfg.solver.clone()
    };
    let su2_basis = build_su2_basis(cfg.rungs, cfg.m_tot)?;
    let h = assemble_su2(&su2_basis, &couplings)?;
    let su2 = lanczos_lowest(h.dim(), |x, y| h.apply(x, y), &solver)?.values;
    let so4_basis = build_so4_basis(cfg.rungs, cfg.m_tot)?;
    let h = assemble_so4(&so4_basis, &couplings)?;
    let so4 = lanczos_lowest(h.dim(), |x, y| h.apply(x, y), &solver)?.values;
    let max_relative_difference = su2
        .iter()
        .zip(&so4)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(SpectrumComparison {
        su2,
        so4,
        max_relative_difference,
    })
}

/// One entry of a coupling sweep.
#[derive(Debug)]
pub struct SweepEntry {
    pub rung_coupling: f64,
    pub output: PathBuf,
    pub result: Result<RunSummary>,
}

/// Runs the base experiment once per rung coupling, in parallel, each
/// writing its own trace file.
pub fn sweep(base: &ExperimentConfig, rung_couplings: &[f64]) -> Vec<SweepEntry> {
    rung_couplings
        .par_iter()
        .map(|&jt| {
            let cfg = base.with_rung_coupling(jt);
            let output = cfg.output.clone().expect("sweep config has an output");
            SweepEntry {
                rung_coupling: jt,
                output,
                result: run_to_file(&cfg).map(|(_, s)| s),
            }
        })
        .collect()
}

/// Comparison table of a sweep as CSV text.
pub fn sweep_table(entries: &[SweepEntry]) -> String {
    let mut out = String::from("J_t,N_min,deepest_n_p1_le_1pct,initial_entropy,stop,output\n");
    for e in entries {
        match &e.result {
            Ok(s) => out.push_str(&format!(
                "{},{},{},{:.16e},{},{}\n",
                e.rung_coupling,
                s.n_min,
                s.deepest_within_one_percent,
                s.initial_entropy,
                s.stop,
                e.output.display()
            )),
            Err(err) => out.push_str(&format!(
                "{},,,,error: {},{}\n",
                e.rung_coupling,
                err.to_string().replace(',', ";"),
                e.output.display()
            )),
        }
    }
    out
}
