//! Frustrated two-leg ladder Hamiltonians written as `H = H0 + g H1`.
//!
//! The rung coupling is the renormalized one: `g = J_t`, `H0 = 0` and `H1`
//! carries the leg and diagonal bonds scaled by the fixed ratios
//! `J_l / J_t` and `J_c / J_t`. Legs are open (bonds between rungs `i` and
//! `i + 1` only).

use std::io::Write;

use nalgebra::{DMatrix, Matrix4};

use crate::basis::{Basis, RungConfiguration, RungState, Scheme};
use crate::error::{Error, Result};
use crate::sparse::SymCsr;

/// Ladder couplings. All three must be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSet {
    rung: f64,
    leg: f64,
    diagonal: f64,
}

impl CouplingSet {
    pub fn new(rung: f64, leg: f64, diagonal: f64) -> Result<Self> {
        for (name, v) in [("J_t", rung), ("J_l", leg), ("J_c", diagonal)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCouplings(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            rung,
            leg,
            diagonal,
        })
    }

    /// J_t
    pub fn rung(&self) -> f64 {
        self.rung
    }

    /// J_l
    pub fn leg(&self) -> f64 {
        self.leg
    }

    /// J_c (both diagonals)
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// γ_tl = J_l / J_t
    pub fn leg_ratio(&self) -> f64 {
        self.leg / self.rung
    }

    /// γ_c = J_c / J_t
    pub fn diagonal_ratio(&self) -> f64 {
        self.diagonal / self.rung
    }

    /// J_1 = (J_l + J_c) / 2, the S·S coupling of the rotated ladder.
    pub fn symmetric_coupling(&self) -> f64 {
        0.5 * (self.leg + self.diagonal)
    }

    /// J_2 = (J_l - J_c) / 2, the R·R coupling of the rotated ladder.
    pub fn antisymmetric_coupling(&self) -> f64 {
        0.5 * (self.leg - self.diagonal)
    }

    pub fn with_rung(&self, rung: f64) -> Result<Self> {
        Self::new(rung, self.leg, self.diagonal)
    }
}

/// `H(g) = H0 + g H1` over a fixed basis.
#[derive(Debug, Clone)]
pub struct SplitHamiltonian {
    h0: SymCsr,
    h1: SymCsr,
    g: f64,
}

impl SplitHamiltonian {
    pub fn new(h0: SymCsr, h1: SymCsr, g: f64) -> Result<Self> {
        if h0.dim() != h1.dim() {
            return Err(Error::Dimension {
                expected: h1.dim(),
                got: h0.dim(),
            });
        }
        Ok(Self { h0, h1, g })
    }

    pub fn dim(&self) -> usize {
        self.h1.dim()
    }

    pub fn coupling(&self) -> f64 {
        self.g
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn set_coupling(&mut self, g: f64) {
        self.g = g;
    }

    pub fn h0(&self) -> &SymCsr {
        &self.h0
    }

    pub fn h1(&self) -> &SymCsr {
        &self.h1
    }

    /// Whether `H0` has no stored entries.
    pub fn h0_is_zero(&self) -> bool {
        self.h0.nnz() == 0
    }

    /// Diagonal of `H(g)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let d0 = self.h0.diagonal();
        let d1 = self.h1.diagonal();
        d0.iter().zip(&d1).map(|(a, b)| a + self.g * b).collect()
    }

    /// `y = H(g) x` without allocation.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        self.h0.mul_add(x, 1.0, y);
        self.h1.mul_add(x, self.g, y);
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// Principal submatrix pair on `keep` (`keep[new] = old`); `g` is kept.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        Ok(Self {
            h0: self.h0.select(keep)?,
            h1: self.h1.select(keep)?,
            g: self.g,
        })
    }

    /// Drops a single state.
    pub fn without(&self, index: usize) -> Result<Self> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index,
                dim: self.dim(),
            });
        }
        let keep: Vec<usize> = (0..self.dim()).filter(|&i| i != index).collect();
        self.restrict(&keep)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.h0.to_dense() + self.h1.to_dense() * self.g
    }

    /// Coordinate dump of `H(g)`: `i j value`, 1-based, 17 significant
    /// digits, both triangles.
    pub fn write_coordinate<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut triplets: Vec<(usize, usize, f64)> = self.h0.triplets().collect();
        triplets.extend(self.h1.triplets().map(|(i, j, v)| (i, j, self.g * v)));
        SymCsr::from_triplets(self.dim(), triplets).write_coordinate(w, 1.0)
    }
}

/// SO(4) generators of one rung on `{|00⟩, |1-1⟩, |10⟩, |11⟩}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RungOperators {
    pub s_plus: Matrix4<f64>,
    pub s_z: Matrix4<f64>,
    pub r_plus: Matrix4<f64>,
    pub r_z: Matrix4<f64>,
}

impl RungOperators {
    pub fn s_minus(&self) -> Matrix4<f64> {
        self.s_plus.transpose()
    }

    pub fn r_minus(&self) -> Matrix4<f64> {
        self.r_plus.transpose()
    }

    /// S² = (S^z)² + (S⁺S⁻ + S⁻S⁺)/2
    pub fn s_squared(&self) -> Matrix4<f64> {
        self.s_z * self.s_z + (self.s_plus * self.s_minus() + self.s_minus() * self.s_plus) * 0.5
    }

    pub fn r_squared(&self) -> Matrix4<f64> {
        self.r_z * self.r_z + (self.r_plus * self.r_minus() + self.r_minus() * self.r_plus) * 0.5
    }
}

/// `X^{(a)(b)} = |a⟩⟨b|`
fn x_op(a: RungState, b: RungState) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(a.index(), b.index())] = 1.0;
    m
}

pub fn rung_operators() -> RungOperators {
    use RungState::*;
    let sqrt2 = std::f64::consts::SQRT_2;
    RungOperators {
        s_plus: (x_op(TripletUp, TripletZero) + x_op(TripletZero, TripletDown)) * sqrt2,
        s_z: x_op(TripletUp, TripletUp) - x_op(TripletDown, TripletDown),
        r_plus: (x_op(TripletUp, Singlet) - x_op(Singlet, TripletDown)) * sqrt2,
        r_z: -(x_op(TripletZero, Singlet) + x_op(Singlet, TripletZero)),
    }
}

/// `A ⊗ B` for 4×4 rung operators, pair index `4 a + b`.
fn kron4(a: &Matrix4<f64>, b: &Matrix4<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(16, 16);
    for (i, j, k, l) in quad_indices() {
        m[(4 * i + k, 4 * j + l)] = a[(i, j)] * b[(k, l)];
    }
    m
}

fn quad_indices() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..4).flat_map(|i| {
        (0..4).flat_map(move |j| (0..4).flat_map(move |k| (0..4).map(move |l| (i, j, k, l))))
    })
}

/// `w_s S_i·S_j + w_r R_i·R_j` on two neighbouring rungs.
fn rung_bond(ops: &RungOperators, w_s: f64, w_r: f64) -> DMatrix<f64> {
    let dot = |zp: &Matrix4<f64>, plus: &Matrix4<f64>| {
        let minus = plus.transpose();
        kron4(zp, zp) + (kron4(plus, &minus) + kron4(&minus, plus)) * 0.5
    };
    dot(&ops.s_z, &ops.s_plus) * w_s + dot(&ops.r_z, &ops.r_plus) * w_r
}

fn su2_bonds(rungs: usize, c: &CouplingSet) -> Vec<(usize, usize, f64)> {
    let site = |rung: usize, leg: usize| 2 * rung + leg;
    let mut bonds = Vec::new();
    for i in 0..rungs {
        bonds.push((site(i, 0), site(i, 1), 1.0));
    }
    for i in 0..rungs.saturating_sub(1) {
        bonds.push((site(i, 0), site(i + 1, 0), c.leg_ratio()));
        bonds.push((site(i, 1), site(i + 1, 1), c.leg_ratio()));
        bonds.push((site(i, 0), site(i + 1, 1), c.diagonal_ratio()));
        bonds.push((site(i, 1), site(i + 1, 0), c.diagonal_ratio()));
    }
    bonds
}

fn check_scheme(basis: &Basis, expected: Scheme) -> Result<()> {
    if basis.scheme() != expected {
        return Err(Error::SchemeMismatch {
            expected,
            got: basis.scheme(),
        });
    }
    Ok(())
}

/// Ladder Hamiltonian in the product (M-scheme) basis, `g = J_t`.
pub fn assemble_su2(basis: &Basis, couplings: &CouplingSet) -> Result<SplitHamiltonian> {
    check_scheme(basis, Scheme::Su2)?;
    let bonds = su2_bonds(basis.rungs(), couplings);
    let n = basis.len();
    let mut triplets = Vec::with_capacity(n * (1 + bonds.len() / 2));
    for (col, &bits) in basis.states().iter().enumerate() {
        let mut diag = 0.0;
        for &(a, b, w) in &bonds {
            let up_a = bits >> a & 1 == 1;
            let up_b = bits >> b & 1 == 1;
            if up_a == up_b {
                diag += 0.25 * w;
            } else {
                diag -= 0.25 * w;
                let flipped = bits ^ (1 << a | 1 << b);
                let row = basis
                    .index_of(flipped)
                    .expect("spin exchange preserves magnetization");
                if row > col {
                    triplets.push((col, row, 0.5 * w));
                }
            }
        }
        triplets.push((col, col, diag));
    }
    SplitHamiltonian::new(
        SymCsr::zeros(n),
        SymCsr::from_triplets(n, triplets),
        couplings.rung(),
    )
}

/// Rotated ladder Hamiltonian in the rung singlet/triplet basis, `g = J_t`.
pub fn assemble_so4(basis: &Basis, couplings: &CouplingSet) -> Result<SplitHamiltonian> {
    check_scheme(basis, Scheme::So4)?;
    let ops = rung_operators();
    let rung_term = (ops.s_squared() - ops.r_squared()) * 0.25;
    let bond = rung_bond(
        &ops,
        couplings.symmetric_coupling() / couplings.rung(),
        couplings.antisymmetric_coupling() / couplings.rung(),
    );
    let rungs = basis.rungs();
    let n = basis.len();
    let mut triplets = Vec::new();
    for (col, &code) in basis.states().iter().enumerate() {
        let cfg = RungConfiguration::new(code, rungs);
        let mut push = |target: RungConfiguration, value: f64| {
            if value == 0.0 {
                return;
            }
            let row = basis
                .index_of(target.code())
                .expect("rung operators preserve magnetization");
            if row >= col {
                triplets.push((col, row, value));
            }
        };
        for i in 0..rungs {
            let a = cfg.rung(i).index();
            for a2 in 0..4 {
                push(
                    cfg.with_rung(i, RungState::from_index(a2)),
                    rung_term[(a2, a)],
                );
            }
        }
        for i in 0..rungs.saturating_sub(1) {
            let pair = 4 * cfg.rung(i).index() + cfg.rung(i + 1).index();
            for out in 0..16 {
                let target = cfg
                    .with_rung(i, RungState::from_index(out / 4))
                    .with_rung(i + 1, RungState::from_index(out % 4));
                push(target, bond[(out, pair)]);
            }
        }
    }
    SplitHamiltonian::new(
        SymCsr::zeros(n),
        SymCsr::from_triplets(n, triplets),
        couplings.rung(),
    )
}

pub fn assemble(basis: &Basis, couplings: &CouplingSet) -> Result<SplitHamiltonian> {
    match basis.scheme() {
        Scheme::Su2 => assemble_su2(basis, couplings),
        Scheme::So4 => assemble_so4(basis, couplings),
    }
}
