//! Diagnostics of a reduction run: relative energy deviations, amplitude
//! entropy per site and the count of relevant ground-state amplitudes.

use crate::error::{Error, Result};

/// Default relevance threshold for ground-state amplitudes.
pub const DEFAULT_RELEVANCE: f64 = 1e-2;

/// Energy per site, `λ / 2L`.
pub fn energy_per_site(lambda: f64, rungs: usize) -> f64 {
    lambda / (2 * rungs) as f64
}

/// Percentage deviation `|(e_ref - e_now) / e_ref| · 100`.
pub fn deviation_p(e_ref: f64, e_now: f64) -> Result<f64> {
    if e_ref == 0.0 {
        return Err(Error::UndefinedReference);
    }
    Ok(((e_ref - e_now) / e_ref).abs() * 100.0)
}

/// Squared amplitudes `P_i = |a_i|²`.
pub fn weights(amplitudes: &[f64]) -> Vec<f64> {
    amplitudes.iter().map(|a| a * a).collect()
}

/// `-(1/2L) Σ P_i ln P_i` of a normalized amplitude vector.
pub fn entropy_per_site(amplitudes: &[f64], rungs: usize) -> Result<f64> {
    let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized { norm });
    }
    let s: f64 = amplitudes
        .iter()
        .map(|a| a * a)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(s.max(0.0) / (2 * rungs) as f64)
}

/// Number of amplitudes with `|a_i| > epsilon`.
pub fn relevant_amplitudes(amplitudes: &[f64], epsilon: f64) -> usize {
    amplitudes.iter().filter(|a| a.abs() > epsilon).count()
}

/// Observables of one ground state relative to a reference spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub energies: Vec<f64>,
    pub deviations: Vec<f64>,
    pub entropy: f64,
    pub relevant_count: usize,
    pub weights: Vec<f64>,
}

impl ObservableRecord {
    /// `values` are the current eigenvalues, `reference` the per-site
    /// energies at full dimension.
    pub fn compute(
        values: &[f64],
        reference: &[f64],
        ground: &[f64],
        rungs: usize,
        epsilon: f64,
    ) -> Result<Self> {
        let energies: Vec<f64> = values.iter().map(|&l| energy_per_site(l, rungs)).collect();
        let deviations = energies
            .iter()
            .zip(reference)
            .map(|(&now, &r)| deviation_p(r, now))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            entropy: entropy_per_site(ground, rungs)?,
            relevant_count: relevant_amplitudes(ground, epsilon),
            weights: weights(ground),
            energies,
            deviations,
        })
    }
}
