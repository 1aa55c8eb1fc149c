#![allow(dead_code, clippy::too_many_arguments)]

use ladder_reduce::sparse::SymCsr;
use ladder_reduce::SplitHamiltonian;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random symmetric matrix with entries in `[-1, 1)`.
pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen::<f64>() * 2.0 - 1.0;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

pub fn to_csr(m: &DMatrix<f64>) -> SymCsr {
    let n = m.nrows();
    let mut t = Vec::new();
    for i in 0..n {
        for j in i..n {
            if m[(i, j)] != 0.0 {
                t.push((i, j, m[(i, j)]));
            }
        }
    }
    SymCsr::from_triplets(n, t)
}

pub fn split(h0: &DMatrix<f64>, h1: &DMatrix<f64>, g: f64) -> SplitHamiltonian {
    SplitHamiltonian::new(to_csr(h0), to_csr(h1), g).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The 2×2 problem on `{φ, e}` built directly from dense `H(g)`, where `φ`
/// is `psi` with component `elim` removed and renormalized.
pub fn reduced_pair(
    h0: &DMatrix<f64>,
    h1: &DMatrix<f64>,
    g: f64,
    psi: &[f64],
    elim: usize,
) -> DMatrix<f64> {
    let h = h0 + h1 * g;
    let n = h.nrows();
    let mut phi = nalgebra::DVector::from_column_slice(psi);
    phi[elim] = 0.0;
    let nrm = phi.norm();
    phi /= nrm;
    let mut e = nalgebra::DVector::zeros(n);
    e[elim] = 1.0;
    let hp = &h * &phi;
    let he = &h * &e;
    DMatrix::from_row_slice(2, 2, &[phi.dot(&hp), phi.dot(&he), e.dot(&hp), e.dot(&he)])
}

pub fn det_shifted(m: &DMatrix<f64>, lambda: f64) -> f64 {
    (m[(0, 0)] - lambda) * (m[(1, 1)] - lambda) - m[(0, 1)] * m[(1, 0)]
}

/// Couplings `g` in `[lo, hi]` at which `lambda` is an eigenvalue of the
/// reduced pair, located by a uniform scan for sign changes followed by
/// bisection.
pub fn scan_roots(
    h0: &DMatrix<f64>,
    h1: &DMatrix<f64>,
    psi: &[f64],
    elim: usize,
    lambda: f64,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Vec<f64> {
    let f = |g: f64| det_shifted(&reduced_pair(h0, h1, g, psi, elim), lambda);
    let mut roots = Vec::new();
    let step = (hi - lo) / samples as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=samples {
        let b = lo + step * i as f64;
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut x, mut y, mut fx) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x + y);
                let fm = f(mid);
                if fm == 0.0 || (y - x).abs() <= 1e-15 * mid.abs().max(1.0) {
                    x = mid;
                    y = mid;
                    break;
                }
                if fx * fm < 0.0 {
                    y = mid;
                } else {
                    x = mid;
                    fx = fm;
                }
            }
            roots.push(0.5 * (x + y));
        }
        a = b;
        fa = fb;
    }
    roots
}

/// Distance from `lambda` to the nearest eigenvalue of a symmetric 2×2.
pub fn eigen_gap(m: &DMatrix<f64>, lambda: f64) -> f64 {
    let sym = m.clone().symmetric_eigen();
    sym.eigenvalues
        .iter()
        .map(|e| (e - lambda).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Two-leg ladder `H1` built from explicit spin matrices on the full
/// `4^L` space, restricted to `M = 0` in SU(2) bit order.
pub fn pauli_ladder(rungs: usize, leg_ratio: f64, diag_ratio: f64) -> DMatrix<f64> {
    let sites = 2 * rungs;
    let dim = 1usize << sites;
    let sz = DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 0.5]);
    let sp = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let sm = sp.transpose();
    let site_op = |op: &DMatrix<f64>, site: usize| {
        let mut m = DMatrix::from_element(1, 1, 1.0);
        for s in (0..sites).rev() {
            let f = if s == site {
                op.clone()
            } else {
                DMatrix::identity(2, 2)
            };
            m = m.kronecker(&f);
        }
        m
    };
    let mut h = DMatrix::zeros(dim, dim);
    let mut bond = |a: usize, b: usize, w: f64| {
        h += (site_op(&sz, a) * site_op(&sz, b)
            + (site_op(&sp, a) * site_op(&sm, b) + site_op(&sm, a) * site_op(&sp, b)) * 0.5)
            * w;
    };
    let site = |rung: usize, leg: usize| 2 * rung + leg;
    for i in 0..rungs {
        bond(site(i, 0), site(i, 1), 1.0);
        if i + 1 < rungs {
            bond(site(i, 0), site(i + 1, 0), leg_ratio);
            bond(site(i, 1), site(i + 1, 1), leg_ratio);
            bond(site(i, 0), site(i + 1, 1), diag_ratio);
            bond(site(i, 1), site(i + 1, 0), diag_ratio);
        }
    }
    let keep: Vec<usize> = (0..dim)
        .filter(|s| (*s as u64).count_ones() as usize == rungs)
        .collect();
    DMatrix::from_fn(keep.len(), keep.len(), |i, j| h[(keep[i], keep[j])])
}
