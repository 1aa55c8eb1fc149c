//! Basis states of a two-leg ladder in a fixed total-magnetization sector.
//!
//! Two schemes are supported. In the SU(2) (M-scheme) basis a state is a
//! product of single-site spin projections, stored as a bit pattern where
//! bit `2i` is the leg-1 spin of rung `i` and bit `2i + 1` the leg-2 spin
//! (bit set means spin up). In the SO(4) basis every rung is coupled to a
//! singlet or triplet, and a state is the base-4 word of its rung labels,
//! rung 0 being the most significant digit.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetry scheme of a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Su2,
    So4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Su2 => f.write_str("su2"),
            Scheme::So4 => f.write_str("so4"),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "su2" | "su(2)" => Ok(Scheme::Su2),
            "so4" | "so(4)" => Ok(Scheme::So4),
            other => Err(format!("unknown scheme '{other}' (expected su2 or so4)")),
        }
    }
}

/// Coupled state of one rung, `|S M⟩`.
///
/// The discriminant is the local index used by the rung operators and by
/// the canonical SO(4) ordering: `|00⟩ < |1-1⟩ < |10⟩ < |11⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RungState {
    Singlet = 0,
    TripletDown = 1,
    TripletZero = 2,
    TripletUp = 3,
}

impl RungState {
    pub const ALL: [RungState; 4] = [
        RungState::Singlet,
        RungState::TripletDown,
        RungState::TripletZero,
        RungState::TripletUp,
    ];

    pub fn from_index(i: usize) -> RungState {
        Self::ALL[i]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Total rung spin S.
    pub fn spin(self) -> u8 {
        match self {
            RungState::Singlet => 0,
            _ => 1,
        }
    }

    /// Rung magnetization M.
    pub fn magnetization(self) -> i32 {
        match self {
            RungState::TripletDown => -1,
            RungState::TripletUp => 1,
            _ => 0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            RungState::Singlet => "00",
            RungState::TripletDown => "1-",
            RungState::TripletZero => "10",
            RungState::TripletUp => "1+",
        }
    }
}

/// Product state of `2L` spin-1/2 sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    bits: u64,
    rungs: usize,
}

impl SpinConfiguration {
    pub fn new(bits: u64, rungs: usize) -> Self {
        Self { bits, rungs }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Whether the spin on `leg` (0 or 1) of rung `rung` points up.
    pub fn is_up(&self, rung: usize, leg: usize) -> bool {
        self.bits >> (2 * rung + leg) & 1 == 1
    }

    /// Σ m_i, in units of ħ.
    pub fn magnetization(&self) -> i32 {
        self.bits.count_ones() as i32 - self.rungs as i32
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rung in 0..self.rungs {
            if rung > 0 {
                f.write_str("|")?;
            }
            for leg in 0..2 {
                f.write_str(if self.is_up(rung, leg) { "+" } else { "-" })?;
            }
        }
        Ok(())
    }
}

/// Product of `L` coupled rung states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RungConfiguration {
    code: u64,
    rungs: usize,
}

impl RungConfiguration {
    pub fn new(code: u64, rungs: usize) -> Self {
        Self { code, rungs }
    }

    pub fn from_states(states: &[RungState]) -> Self {
        let code = states
            .iter()
            .fold(0u64, |acc, s| acc * 4 + s.index() as u64);
        Self {
            code,
            rungs: states.len(),
        }
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn rung(&self, i: usize) -> RungState {
        let shift = 2 * (self.rungs - 1 - i);
        RungState::from_index((self.code >> shift & 3) as usize)
    }

    /// Same configuration with rung `i` replaced.
    pub fn with_rung(&self, i: usize, state: RungState) -> Self {
        let shift = 2 * (self.rungs - 1 - i);
        let code = self.code & !(3 << shift) | (state.index() as u64) << shift;
        Self {
            code,
            rungs: self.rungs,
        }
    }

    pub fn magnetization(&self) -> i32 {
        (0..self.rungs).map(|i| self.rung(i).magnetization()).sum()
    }
}

impl fmt::Display for RungConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rungs {
            if i > 0 {
                f.write_str("|")?;
            }
            f.write_str(self.rung(i).label())?;
        }
        Ok(())
    }
}

/// Ordered set of basis states spanning one magnetization sector.
#[derive(Debug, Clone)]
pub struct Basis {
    scheme: Scheme,
    rungs: usize,
    m_tot: i32,
    states: Vec<u64>,
    canonical: Vec<usize>,
    diagonal: Option<Vec<f64>>,
    lookup: HashMap<u64, usize>,
}

fn check_sector(rungs: usize, m_tot: i32) -> Result<()> {
    if rungs == 0 || rungs > 16 || m_tot.unsigned_abs() as usize > rungs {
        return Err(Error::EmptySector {
            sites: rungs,
            m_tot,
        });
    }
    Ok(())
}

/// All `2L`-bit patterns with `L + M_tot` bits set, ascending.
pub fn build_su2_basis(rungs: usize, m_tot: i32) -> Result<Basis> {
    check_sector(rungs, m_tot)?;
    let up = (rungs as i32 + m_tot) as u32;
    let states: Vec<u64> = (0u64..1 << (2 * rungs))
        .filter(|b| b.count_ones() == up)
        .collect();
    Ok(Basis::from_canonical(Scheme::Su2, rungs, m_tot, states))
}

/// All rung-label words with Σ M_i = M_tot, lexicographic.
pub fn build_so4_basis(rungs: usize, m_tot: i32) -> Result<Basis> {
    check_sector(rungs, m_tot)?;
    let states: Vec<u64> = (0u64..1 << (2 * rungs))
        .filter(|&c| RungConfiguration::new(c, rungs).magnetization() == m_tot)
        .collect();
    Ok(Basis::from_canonical(Scheme::So4, rungs, m_tot, states))
}

pub fn build_basis(scheme: Scheme, rungs: usize, m_tot: i32) -> Result<Basis> {
    match scheme {
        Scheme::Su2 => build_su2_basis(rungs, m_tot),
        Scheme::So4 => build_so4_basis(rungs, m_tot),
    }
}

impl Basis {
    fn from_canonical(scheme: Scheme, rungs: usize, m_tot: i32, states: Vec<u64>) -> Self {
        let lookup = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Self {
            scheme,
            rungs,
            m_tot,
            canonical: (0..states.len()).collect(),
            states,
            diagonal: None,
            lookup,
        }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Number of rungs, i.e. sites per leg.
    pub fn rungs(&self) -> usize {
        self.rungs
    }

    pub fn m_tot(&self) -> i32 {
        self.m_tot
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Raw state codes in current order.
    pub fn states(&self) -> &[u64] {
        &self.states
    }

    /// Position of state `i` in the canonical (pre-sort) order.
    pub fn canonical_index(&self, i: usize) -> usize {
        self.canonical[i]
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref()
    }

    pub fn index_of(&self, code: u64) -> Option<usize> {
        self.lookup.get(&code).copied()
    }

    pub fn spin_configuration(&self, i: usize) -> Option<SpinConfiguration> {
        (self.scheme == Scheme::Su2).then(|| SpinConfiguration::new(self.states[i], self.rungs))
    }

    pub fn rung_configuration(&self, i: usize) -> Option<RungConfiguration> {
        (self.scheme == Scheme::So4).then(|| RungConfiguration::new(self.states[i], self.rungs))
    }

    pub fn label(&self, i: usize) -> String {
        match self.scheme {
            Scheme::Su2 => SpinConfiguration::new(self.states[i], self.rungs).to_string(),
            Scheme::So4 => RungConfiguration::new(self.states[i], self.rungs).to_string(),
        }
    }

    /// Reorders a basis by `perm`, where `perm[new] = old`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Basis> {
        if perm.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: perm.len(),
            });
        }
        let states: Vec<u64> = perm.iter().map(|&p| self.states[p]).collect();
        let lookup = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Ok(Basis {
            scheme: self.scheme,
            rungs: self.rungs,
            m_tot: self.m_tot,
            canonical: perm.iter().map(|&p| self.canonical[p]).collect(),
            diagonal: self
                .diagonal
                .as_ref()
                .map(|d| perm.iter().map(|&p| d[p]).collect()),
            states,
            lookup,
        })
    }

    /// Writes `index,label,epsilon` rows (1-based index, empty epsilon when
    /// no diagonal has been attached).
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,label,epsilon")?;
        for i in 0..self.len() {
            match &self.diagonal {
                Some(d) => writeln!(w, "{},{},{:.16e}", i + 1, self.label(i), d[i])?,
                None => writeln!(w, "{},{},", i + 1, self.label(i))?,
            }
        }
        Ok(())
    }
}

/// Sorts `basis` ascending by the diagonal energies `diag`, ties kept in
/// current order. Returns the reordered basis (with the sorted diagonal
/// attached) and the permutation `perm[new] = old`.
pub fn order_by_diagonal(basis: &Basis, diag: &[f64]) -> Result<(Basis, Vec<usize>)> {
    if diag.len() != basis.len() {
        return Err(Error::Dimension {
            expected: basis.len(),
            got: diag.len(),
        });
    }
    let mut perm: Vec<usize> = (0..diag.len()).collect();
    perm.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let mut with_diag = basis.clone();
    with_diag.diagonal = Some(diag.to_vec());
    let ordered = with_diag.permuted(&perm)?;
    Ok((ordered, perm))
}

/// Orthogonal change of basis from the SU(2) product basis to the SO(4)
/// rung basis of the same sector: rows index `so4`, columns index `su2`,
/// so that `H_so4 = U H_su2 Uᵀ`.
///
/// The singlet carries the phase `(|-+⟩ - |+-⟩)/√2` (leg-1 spin written
/// first), which is the phase implied by the rung generator matrices in
/// [`crate::hamiltonian::rung_operators`].
pub fn rung_transform(su2: &Basis, so4: &Basis) -> Result<DMatrix<f64>> {
    if su2.scheme != Scheme::Su2 {
        return Err(Error::SchemeMismatch {
            expected: Scheme::Su2,
            got: su2.scheme,
        });
    }
    if so4.scheme != Scheme::So4 {
        return Err(Error::SchemeMismatch {
            expected: Scheme::So4,
            got: so4.scheme,
        });
    }
    if su2.rungs != so4.rungs || su2.m_tot != so4.m_tot {
        return Err(Error::Dimension {
            expected: su2.len(),
            got: so4.len(),
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rungs = su2.rungs;
    let mut u = DMatrix::zeros(so4.len(), su2.len());
    for (row, &code) in so4.states.iter().enumerate() {
        let cfg = RungConfiguration::new(code, rungs);
        // Expand the product of rung states into (bits, amplitude) terms.
        let mut terms: Vec<(u64, f64)> = vec![(0, 1.0)];
        for i in 0..rungs {
            // (leg-1 up, leg-2 up, amplitude)
            let local: &[(u64, u64, f64)] = match cfg.rung(i) {
                RungState::TripletUp => &[(1, 1, 1.0)],
                RungState::TripletDown => &[(0, 0, 1.0)],
                RungState::TripletZero => &[(1, 0, h), (0, 1, h)],
                RungState::Singlet => &[(1, 0, -h), (0, 1, h)],
            };
            terms = terms
                .iter()
                .flat_map(|&(bits, amp)| {
                    local
                        .iter()
                        .map(move |&(a, b, c)| (bits | a << (2 * i) | b << (2 * i + 1), amp * c))
                })
                .collect();
        }
        for (bits, amp) in terms {
            let col = su2
                .index_of(bits)
                .expect("rung expansion preserves magnetization");
            u[(row, col)] += amp;
        }
    }
    Ok(u)
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_dimensions() {
        assert_eq!(build_su2_basis(6, 0).unwrap().len(), 924);
        assert_eq!(build_su2_basis(8, 0).unwrap().len(), 12870);
        let one = build_su2_basis(1, 0).unwrap();
        assert_eq!(one.states(), &[0b01, 0b10]);
        assert_eq!(one.label(0), "+-");
        assert_eq!(one.label(1), "-+");
    }

    #[test]
    fn so4_small_sectors() {
        let one = build_so4_basis(1, 0).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one.label(0), "00");
        assert_eq!(one.label(1), "10");
        assert_eq!(build_so4_basis(2, 0).unwrap().len(), 6);
    }

    #[test]
    fn so4_l6_matches_brute_force_count() {
        // Independent count: enumerate all 4^6 label words.
        let mut count = 0;
        for word in 0..4usize.pow(6) {
            let m: i32 = (0..6)
                .map(|i| RungState::from_index(word / 4usize.pow(i) % 4).magnetization())
                .sum();
            if m == 0 {
                count += 1;
            }
        }
        assert_eq!(count, 924);
        assert_eq!(build_so4_basis(6, 0).unwrap().len(), count);
    }

    #[test]
    fn sector_errors() {
        assert!(matches!(
            build_su2_basis(3, 4),
            Err(Error::EmptySector { .. })
        ));
        assert!(matches!(
            build_so4_basis(2, -3),
            Err(Error::EmptySector { .. })
        ));
        assert_eq!(build_su2_basis(3, 3).unwrap().len(), 1);
    }

    #[test]
    fn dimensions_match_binomial() {
        for l in 1..=8u64 {
            for m in -(l as i32)..=(l as i32) {
                let expected = binomial(2 * l, (l as i64 + m as i64) as u64) as usize;
                assert_eq!(build_su2_basis(l as usize, m).unwrap().len(), expected);
                assert_eq!(build_so4_basis(l as usize, m).unwrap().len(), expected);
            }
        }
    }

    #[test]
    fn ordering_examples() {
        let two = build_su2_basis(1, 0).unwrap();
        assert!(order_by_diagonal(&two, &[1.0]).is_err());

        let b = build_so4_basis(2, 1).unwrap();
        let (_, perm) = order_by_diagonal(&b, &[0.5, -0.3, 0.1, 0.1]).unwrap();
        assert_eq!(perm, vec![1, 2, 3, 0]);

        let (ordered, perm) = order_by_diagonal(&b, &[2.0; 4]).unwrap();
        assert_eq!(perm, vec![0, 1, 2, 3]);
        assert_eq!(ordered.states(), b.states());
    }

    #[test]
    fn ordering_three_states() {
        let b = Basis::from_canonical(Scheme::Su2, 2, 0, vec![0b0011, 0b0101, 0b0110]);
        let (ordered, perm) = order_by_diagonal(&b, &[0.5, -0.3, 0.1]).unwrap();
        let one_based: Vec<usize> = perm.iter().map(|p| p + 1).collect();
        assert_eq!(one_based, vec![2, 3, 1]);
        assert_eq!(ordered.diagonal().unwrap(), &[-0.3, 0.1, 0.5]);
        assert_eq!(ordered.canonical_index(0), 1);
        assert_eq!(ordered.index_of(0b0011), Some(2));
    }

    #[test]
    fn rung_transform_single_rung() {
        let su2 = build_su2_basis(1, 0).unwrap();
        let so4 = build_so4_basis(1, 0).unwrap();
        let u = rung_transform(&su2, &so4).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // su2 order: "+-" (bits 01), "-+" (bits 10)
        // Singlet is (|+-⟩ - |-+⟩)/√2 up to an overall sign.
        assert!((u[(0, 0)].abs() - h).abs() < 1e-15);
        assert!((u[(0, 0)] + u[(0, 1)]).abs() < 1e-15);
        assert!((u[(1, 0)] - h).abs() < 1e-15);
        assert!((u[(1, 1)] - h).abs() < 1e-15);
    }

    #[test]
    fn rung_transform_is_orthogonal() {
        for l in 1..=4 {
            let su2 = build_su2_basis(l, 0).unwrap();
            let so4 = build_so4_basis(l, 0).unwrap();
            let u = rung_transform(&su2, &so4).unwrap();
            let err = (u.transpose() * &u - DMatrix::identity(u.ncols(), u.ncols())).amax();
            assert!(err < 1e-12, "L={l}: {err}");
        }
        let su2 = build_su2_basis(2, 0).unwrap();
        assert!(rung_transform(&su2, &su2).is_err());
    }

    #[test]
    fn dump_format() {
        let b = build_so4_basis(1, 0).unwrap();
        let (b, _) = order_by_diagonal(&b, &[0.25, -0.75]).unwrap();
        let mut out = Vec::new();
        b.write_dump(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "index,label,epsilon\n1,10,-7.5000000000000000e-1\n2,00,2.5000000000000000e-1\n"
        );
    }

    #[test]
    fn rung_configuration_roundtrip() {
        let cfg = RungConfiguration::from_states(&[
            RungState::TripletUp,
            RungState::Singlet,
            RungState::TripletDown,
        ]);
        assert_eq!(cfg.rung(0), RungState::TripletUp);
        assert_eq!(cfg.rung(2), RungState::TripletDown);
        assert_eq!(cfg.magnetization(), 0);
        let swapped = cfg.with_rung(1, RungState::TripletZero);
        assert_eq!(swapped.rung(1), RungState::TripletZero);
        assert_eq!(swapped.to_string(), "1+|10|1-");
    }
}
