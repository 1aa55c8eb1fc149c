//! Lowest eigenpairs of real symmetric operators.
//!
//! [`lanczos_lowest`] runs Lanczos with full (twice-iterated Gram-Schmidt)
//! reorthogonalization of the Krylov basis. Ritz values are taken from the
//! tridiagonal projection with an implicit QL iteration; convergence is
//! tested with the usual bound `|β_m y_m|` and confirmed with true residuals
//! before returning. [`dense_lowest`] is the dense reference path.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Gap below which two eigenvalues are reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of lowest eigenpairs.
    pub k: usize,
    /// Residual tolerance, relative to `max(1, max |θ|)`.
    pub tol: f64,
    /// Cap on the Krylov dimension.
    pub max_iter: usize,
    /// Seed of the random start vector.
    pub seed: u64,
    /// Problems with dimension at or below this use the dense path.
    pub dense_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            k: 4,
            tol: 1e-10,
            max_iter: 500,
            seed: 0x5eed,
            dense_threshold: 64,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidSolverConfig("k must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidSolverConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < self.k {
            return Err(Error::InvalidSolverConfig(format!(
                "max_iter ({}) must be at least k ({})",
                self.max_iter, self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unit eigenvectors; the largest-magnitude component is positive.
    pub vectors: Vec<Vec<f64>>,
    /// `‖H v - λ v‖` per pair.
    pub residuals: Vec<f64>,
    /// Krylov dimension reached (0 for the dense path).
    pub iterations: usize,
    /// The k-th and (k+1)-th eigenvalues are closer than [`DEGENERACY_GAP`].
    pub degenerate: bool,
}

impl EigenSolution {
    pub fn ground_energy(&self) -> f64 {
        self.values[0]
    }

    pub fn ground_state(&self) -> &[f64] {
        &self.vectors[0]
    }
}

/// Flips `v` so that its component of largest magnitude (first one on
/// ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL
/// with Wilkinson shifts.
///
/// `diag` has length `m`, `off` length `m - 1`. Only the rows of the
/// eigenvector matrix listed in `rows` are accumulated. Returns eigenvalues
/// in ascending order and, for each tracked row, that row of the
/// eigenvector matrix permuted consistently.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], rows: &[usize]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = diag.len();
    assert!(off.len() + 1 == m || m == 0, "off-diagonal length mismatch");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| (0..m).map(|c| if c == r { 1.0 } else { 0.0 }).collect())
        .collect();

    for l in 0..m {
        let mut iter = 0;
        loop {
            let mut mm = l;
            while mm + 1 < m {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            assert!(iter <= 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[mm] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..mm).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&i| d[i]).collect();
    let rows = z
        .into_iter()
        .map(|row| order.iter().map(|&i| row[i]).collect())
        .collect();
    (values, rows)
}

/// Dense symmetric eigensolver, `k` lowest pairs.
pub fn dense_lowest(h: &DMatrix<f64>, k: usize) -> EigenSolution {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = k.min(n);

    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for &i in &order[..k] {
        let lambda = eig.eigenvalues[i];
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        fix_sign(&mut v);
        let hv = h * nalgebra::DVector::from_column_slice(&v);
        let r = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        values.push(lambda);
        vectors.push(v);
        residuals.push(r);
    }
    let degenerate = k < n && (eig.eigenvalues[order[k]] - values[k - 1]).abs() < DEGENERACY_GAP;
    EigenSolution {
        values,
        vectors,
        residuals,
        iterations: 0,
        degenerate,
    }
}

/// Lowest `cfg.k` eigenpairs of the symmetric operator `apply` (which
/// writes `H x` into its second argument) of dimension `n`, from a seeded
/// random start vector.
pub fn lanczos_lowest<F>(n: usize, apply: F, cfg: &SolverConfig) -> Result<EigenSolution>
where
    F: FnMut(&[f64], &mut [f64]),
{
    lanczos_lowest_from(n, apply, cfg, None)
}

/// As [`lanczos_lowest`], starting the Krylov sequence from `start` when
/// given (it need not be normalized).
pub fn lanczos_lowest_from<F>(
    n: usize,
    mut apply: F,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<EigenSolution>
where
    F: FnMut(&[f64], &mut [f64]),
{
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Dimension {
            expected: 1,
            got: 0,
        });
    }
    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: s.len(),
            });
        }
    }
    if n <= cfg.dense_threshold {
        let mut dense = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                dense[(i, j)] = col[i];
            }
        }
        return Ok(dense_lowest(&dense, cfg.k));
    }
    Lanczos::new(n, cfg).run(&mut apply, start)
}

struct Lanczos<'a> {
    n: usize,
    k: usize,
    cfg: &'a SolverConfig,
    rng: ChaCha8Rng,
    basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl<'a> Lanczos<'a> {
    fn new(n: usize, cfg: &'a SolverConfig) -> Self {
        Self {
            n,
            k: cfg.k.min(n),
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            basis: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
        }
    }

    fn random_vector(&mut self) -> Vec<f64> {
        (0..self.n).map(|_| self.rng.gen::<f64>() - 0.5).collect()
    }

    fn orthogonalize(&self, w: &mut [f64]) {
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(w, q);
                axpy(-c, q, w);
            }
        }
    }

    /// Fresh unit vector orthogonal to the current basis.
    fn new_direction(&mut self) -> Vec<f64> {
        loop {
            let mut v = self.random_vector();
            self.orthogonalize(&mut v);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return v;
            }
        }
    }

    fn run<F>(mut self, apply: &mut F, start: Option<&[f64]>) -> Result<EigenSolution>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let m_max = self.cfg.max_iter.min(self.n);
        let mut random_start = true;
        let mut v = match start {
            Some(s) if norm(s) > 0.0 && s.iter().all(|x| x.is_finite()) => {
                random_start = false;
                s.to_vec()
            }
            _ => self.random_vector(),
        };
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        self.basis.push(v);

        let mut w = vec![0.0; self.n];
        let mut block_start = 0;
        let mut scale: f64 = 0.0;
        loop {
            let j = self.basis.len() - 1;
            apply(&self.basis[j], &mut w);
            let a = dot(&w, &self.basis[j]);
            axpy(-a, &self.basis[j], &mut w);
            if j > 0 && self.beta[j - 1] != 0.0 {
                axpy(-self.beta[j - 1], &self.basis[j - 1], &mut w);
            }
            self.orthogonalize(&mut w);
            self.alpha.push(a);
            let b = norm(&w);
            scale = scale.max(a.abs()).max(b);
            let m = j + 1;
            let exhausted = m == self.n;
            let breakdown = exhausted || b <= 1e-12 * scale.max(f64::MIN_POSITIVE);

            // A breakdown ends an invariant subspace; unless it came from a
            // random start it may miss low-lying states, so a fresh block
            // has to run for a while before convergence is accepted.
            let trusted = exhausted
                || (block_start == 0 && random_start)
                || m - block_start >= 10.min(self.n - block_start);
            if m >= self.k {
                let b_eff = if breakdown { 0.0 } else { b };
                let (theta, last_row) = tridiagonal_eigen(&self.alpha, &self.beta, &[m - 1]);
                let tol = self.cfg.tol * theta.iter().fold(1.0f64, |acc, t| acc.max(t.abs()));
                let estimated = (0..self.k).all(|i| (b_eff * last_row[0][i]).abs() <= tol);
                if estimated && (trusted || !breakdown) {
                    let sol = self.ritz_pairs(apply);
                    if sol.residuals.iter().all(|r| *r <= tol) {
                        return Ok(sol);
                    }
                }
            }
            if m >= m_max {
                let best = self.ritz_pairs(apply);
                return Err(Error::NotConverged {
                    iterations: m,
                    residuals: best.residuals.clone(),
                    best: Box::new(best),
                });
            }
            if breakdown {
                self.beta.push(0.0);
                let next = self.new_direction();
                self.basis.push(next);
                block_start = m;
            } else {
                self.beta.push(b);
                w.iter_mut().for_each(|x| *x /= b);
                self.basis.push(w.clone());
            }
        }
    }

    fn ritz_pairs<F>(&self, apply: &mut F) -> EigenSolution
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let m = self.alpha.len();
        let rows: Vec<usize> = (0..m).collect();
        let (theta, z) = tridiagonal_eigen(&self.alpha, &self.beta[..m - 1], &rows);
        let k = self.k.min(m);
        let mut values = Vec::with_capacity(k);
        let mut vectors = Vec::with_capacity(k);
        let mut residuals = Vec::with_capacity(k);
        let mut hv = vec![0.0; self.n];
        for i in 0..k {
            let mut x = vec![0.0; self.n];
            for (j, q) in self.basis[..m].iter().enumerate() {
                axpy(z[j][i], q, &mut x);
            }
            let nx = norm(&x);
            x.iter_mut().for_each(|v| *v /= nx);
            fix_sign(&mut x);
            apply(&x, &mut hv);
            let r = hv
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - theta[i] * b).powi(2))
                .sum::<f64>()
                .sqrt();
            values.push(theta[i]);
            vectors.push(x);
            residuals.push(r);
        }
        let degenerate = k < theta.len() && (theta[k] - theta[k - 1]).abs() < DEGENERACY_GAP;
        EigenSolution {
            values,
            vectors,
            residuals,
            iterations: m,
            degenerate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_operator(d: Vec<f64>) -> impl FnMut(&[f64], &mut [f64]) {
        move |x, y| {
            for i in 0..x.len() {
                y[i] = d[i] * x[i];
            }
        }
    }

    fn lanczos_only(k: usize) -> SolverConfig {
        SolverConfig {
            k,
            dense_threshold: 0,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let d = [2.0, -1.0, 0.5, 3.0, 1.0];
        let e = [0.3, 1.1, -0.7, 0.2];
        let rows: Vec<usize> = (0..5).collect();
        let (vals, z) = tridiagonal_eigen(&d, &e, &rows);
        let mut t = DMatrix::zeros(5, 5);
        for i in 0..5 {
            t[(i, i)] = d[i];
            if i < 4 {
                t[(i, i + 1)] = e[i];
                t[(i + 1, i)] = e[i];
            }
        }
        let dense = dense_lowest(&t, 5);
        for i in 0..5 {
            assert!((vals[i] - dense.values[i]).abs() < 1e-13);
            let col: Vec<f64> = (0..5).map(|r| z[r][i]).collect();
            let tv = &t * nalgebra::DVector::from_vec(col.clone());
            for r in 0..5 {
                assert!((tv[r] - vals[i] * col[r]).abs() < 1e-12);
            }
        }
        let (_, last) = tridiagonal_eigen(&d, &e, &[4]);
        for i in 0..5 {
            assert!((last[0][i] - z[4][i]).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_operator() {
        let sol = lanczos_lowest(100, diag_operator(vec![1.0; 100]), &lanczos_only(1)).unwrap();
        assert!((sol.values[0] - 1.0).abs() < 1e-14);
        assert!((norm(&sol.vectors[0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_operator_lowest_two() {
        let d: Vec<f64> = (1..=200).map(|i| i as f64).collect();
        let sol = lanczos_lowest(200, diag_operator(d), &lanczos_only(2)).unwrap();
        assert!((sol.values[0] - 1.0).abs() < 1e-10);
        assert!((sol.values[1] - 2.0).abs() < 1e-10);
        assert!(sol.residuals.iter().all(|r| *r <= 1e-10 * 200.0));
        assert!(sol.vectors[0][0] > 0.999);
    }

    #[test]
    fn dense_small_cases() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sol = dense_lowest(&m, 2);
        assert!((sol.values[0] + 1.0).abs() < 1e-15);
        assert!((sol.values[1] - 1.0).abs() < 1e-15);
        let sol = dense_lowest(&DMatrix::from_element(1, 1, 3.5), 4);
        assert_eq!(sol.values, vec![3.5]);
    }

    #[test]
    fn dense_random_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DMatrix::from_fn(50, 50, |_, _| rng.gen::<f64>() - 0.5);
        let h = &a + a.transpose();
        let sol = dense_lowest(&h, 50);
        assert!(
            sol.residuals.iter().all(|r| *r <= 1e-12),
            "{:?}",
            sol.residuals
        );
        for w in sol.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn lanczos_matches_dense_on_random_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 300;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        let h = &a + a.transpose();
        let reference = dense_lowest(&h, 4);
        let apply = |x: &[f64], y: &mut [f64]| {
            let r = &h * nalgebra::DVector::from_column_slice(x);
            y.copy_from_slice(r.as_slice());
        };
        let sol = lanczos_lowest(n, apply, &lanczos_only(4)).unwrap();
        for i in 0..4 {
            assert!((sol.values[i] - reference.values[i]).abs() < 1e-9 * reference.values[i].abs());
            let overlap = dot(&sol.vectors[i], &reference.vectors[i]);
            assert!((overlap - 1.0).abs() < 1e-8, "pair {i}: overlap {overlap}");
        }
        // Orthonormality of the returned vectors.
        for i in 0..4 {
            for j in 0..4 {
                let o = dot(&sol.vectors[i], &sol.vectors[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((o - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let d: Vec<f64> = (0..150).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let a = lanczos_lowest(150, diag_operator(d.clone()), &lanczos_only(4)).unwrap();
        let b = lanczos_lowest(150, diag_operator(d), &lanczos_only(4)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn degenerate_levels_are_flagged() {
        let mut d: Vec<f64> = (0..120).map(|i| i as f64).collect();
        d[1] = 0.0;
        let sol = dense_lowest(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)), 1);
        assert!(sol.degenerate);
    }

    #[test]
    fn exact_eigenvector_start_still_finds_all_pairs() {
        let d: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let mut start = vec![0.0; 100];
        start[0] = 1.0;
        let sol =
            lanczos_lowest_from(100, diag_operator(d), &lanczos_only(4), Some(&start)).unwrap();
        for i in 0..4 {
            assert!((sol.values[i] - i as f64).abs() < 1e-10, "{:?}", sol.values);
        }
    }

    #[test]
    fn non_convergence_reports_best_effort() {
        let d: Vec<f64> = (0..400).map(|i| (i as f64).sqrt()).collect();
        let cfg = SolverConfig {
            max_iter: 6,
            ..lanczos_only(4)
        };
        match lanczos_lowest(400, diag_operator(d), &cfg) {
            Err(Error::NotConverged {
                iterations,
                residuals,
                best,
            }) => {
                assert_eq!(iterations, 6);
                assert_eq!(residuals.len(), 4);
                assert_eq!(best.values.len(), 4);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            k: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            tol: -1.0,
            ..SolverConfig::default()
        };
        assert!(lanczos_lowest(3, diag_operator(vec![1.0; 3]), &bad).is_err());
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }
}
