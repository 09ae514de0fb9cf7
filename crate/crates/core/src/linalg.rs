//! Small dense real/complex matrix kernels.
//!
//! Everything here targets the tiny sizes of the precoding problem
//! (K <= 32 real dimensions), so the implementations favor numerical
//! robustness and determinism over speed: Householder QR with a
//! nonnegative-diagonal sign convention, triangular back-substitution,
//! Cholesky-based regularized pseudo-inverse, and Jacobi eigen-iteration
//! on M^T M for singular values.

// Index loops mirror the matrix arithmetic.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use crate::error::Error;

/// Diagonal threshold below which a triangular factor counts as rank
/// deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Pivot threshold for the Gram-matrix Cholesky solve.
pub const PIVOT_TOL: f64 = 1e-14;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    /// Builds a matrix from row-major data. Panics on a shape mismatch or
    /// non-finite entries; matrices enter the system only through code we
    /// control, so a NaN here is a bug, not an input error.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "empty matrix");
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        assert!(data.iter().all(|x| x.is_finite()), "non-finite entry");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length mismatch");
        let mut out = vec![0.0; self.rows];
        for r in 0..self.rows {
            let mut sum = 0.0;
            for c in 0..self.cols {
                sum += self.get(r, c) * v[c];
            }
            out[r] = sum;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.rows, self.cols, self.data.iter().map(|x| x * k).collect())
    }

    /// Sum of squared entries.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Sum of squared entries of a real matrix.
pub fn frobenius_norm_sq(m: &RealMatrix) -> f64 {
    m.frobenius_norm_sq()
}

/// Dense complex matrix, row-major. Only holds the channel before the
/// real-valued decomposition; all factorizations happen in the real domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert!(rows >= 1 && cols >= 1, "empty matrix");
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        assert!(
            data.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "non-finite entry"
        );
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                for c in 0..other.cols {
                    out[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Self::new(self.rows, other.cols, out)
    }

    pub fn hermitian(&self) -> Self {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[c * self.rows + r] = self.get(r, c).conj();
            }
        }
        Self::new(self.cols, self.rows, out)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Thin QR factors: Q has orthonormal columns, R is square upper triangular
/// with a nonnegative diagonal (sign convention makes the factorization
/// unique and tests deterministic).
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: RealMatrix,
    pub r: RealMatrix,
}

/// Householder reduction: overwrites a copy of `m` with R in its upper
/// triangle and returns the reflector vectors (each paired with v^T v).
fn householder_reduce(m: &RealMatrix) -> (RealMatrix, Vec<(Vec<f64>, f64)>) {
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cols);

    for k in 0..cols {
        let mut norm_sq = 0.0;
        for i in k..rows {
            let v = a.get(i, k);
            norm_sq += v * v;
        }
        let norm = norm_sq.sqrt();

        let mut v = vec![0.0; rows - k];
        let mut vtv = 0.0;
        if norm > 0.0 {
            let a0 = a.get(k, k);
            let alpha = if a0 >= 0.0 { -norm } else { norm };
            v[0] = a0 - alpha;
            for i in (k + 1)..rows {
                v[i - k] = a.get(i, k);
            }
            vtv = v.iter().map(|x| x * x).sum();
            if vtv > 0.0 {
                // Apply I - 2 v v^T / v^T v to the trailing block.
                for j in (k + 1)..cols {
                    let mut dot = 0.0;
                    for i in k..rows {
                        dot += v[i - k] * a.get(i, j);
                    }
                    let w = 2.0 * dot / vtv;
                    for i in k..rows {
                        a.set(i, j, a.get(i, j) - w * v[i - k]);
                    }
                }
            }
            // Annihilated column.
            a.set(k, k, alpha);
            for i in (k + 1)..rows {
                a.set(i, k, 0.0);
            }
        }
        reflectors.push((v, vtv));
    }
    (a, reflectors)
}

fn extract_r(a: &RealMatrix) -> RealMatrix {
    let cols = a.cols();
    let mut r = RealMatrix::zeros(cols, cols);
    for i in 0..cols {
        for j in i..cols {
            r.set(i, j, a.get(i, j));
        }
    }
    r
}

fn check_rank(r: &RealMatrix) -> Result<(), Error> {
    let cols = r.cols();
    let min_diag = (0..cols).map(|k| r.get(k, k)).fold(f64::INFINITY, f64::min);
    if min_diag <= RANK_TOL {
        return Err(Error::RankDeficient { pivot: min_diag });
    }
    Ok(())
}

/// Householder QR of an m x n matrix with m >= n.
///
/// Returns thin factors (Q is m x n, R is n x n) with R's diagonal forced
/// nonnegative. Fails with `RankDeficient` when any diagonal of R falls to
/// `RANK_TOL` or below, which the channel harness treats as "redraw".
pub fn qr_decompose(m: &RealMatrix) -> Result<QrFactors, Error> {
    let rows = m.rows();
    let cols = m.cols();
    assert!(rows >= cols, "qr_decompose requires rows >= cols");

    let (a, reflectors) = householder_reduce(m);
    let mut r = extract_r(&a);

    // Accumulate thin Q = H_0 H_1 ... H_{n-1} [I; 0].
    let mut q = RealMatrix::zeros(rows, cols);
    for i in 0..cols {
        q.set(i, i, 1.0);
    }
    for k in (0..cols).rev() {
        let (v, vtv) = &reflectors[k];
        if *vtv <= 0.0 {
            continue;
        }
        for j in 0..cols {
            let mut dot = 0.0;
            for i in k..rows {
                dot += v[i - k] * q.get(i, j);
            }
            let w = 2.0 * dot / vtv;
            for i in k..rows {
                q.set(i, j, q.get(i, j) - w * v[i - k]);
            }
        }
    }

    // Sign convention: nonnegative diagonal of R.
    for k in 0..cols {
        if r.get(k, k) < 0.0 {
            for j in 0..cols {
                r.set(k, j, -r.get(k, j));
            }
            for i in 0..rows {
                q.set(i, k, -q.get(i, k));
            }
        }
    }

    check_rank(&r)?;
    Ok(QrFactors { q, r })
}

/// The R factor alone, same sign convention and rank check as
/// [`qr_decompose`] but without accumulating Q. The implied Q absorbs the
/// sign flips.
pub fn qr_r_factor(m: &RealMatrix) -> Result<RealMatrix, Error> {
    assert!(m.rows() >= m.cols(), "qr_r_factor requires rows >= cols");
    let (a, _) = householder_reduce(m);
    let mut r = extract_r(&a);
    for k in 0..r.cols() {
        if r.get(k, k) < 0.0 {
            for j in 0..r.cols() {
                r.set(k, j, -r.get(k, j));
            }
        }
    }
    check_rank(&r)?;
    Ok(r)
}

/// L = (R^-1)^T for upper triangular R: the lower triangular metric matrix
/// of the perturbation search.
pub fn lower_from_r_inverse(r: &RealMatrix) -> Result<RealMatrix, Error> {
    assert_eq!(r.rows(), r.cols(), "triangular inverse needs a square matrix");
    let n = r.rows();
    for k in 0..n {
        let d = r.get(k, k);
        if d.abs() <= RANK_TOL {
            return Err(Error::RankDeficient { pivot: d });
        }
    }

    // Back-substitution for X = R^-1, column by column.
    let mut x = RealMatrix::zeros(n, n);
    for j in 0..n {
        x.set(j, j, 1.0 / r.get(j, j));
        for i in (0..j).rev() {
            let mut sum = 0.0;
            for k in (i + 1)..=j {
                sum += r.get(i, k) * x.get(k, j);
            }
            x.set(i, j, -sum / r.get(i, i));
        }
    }
    Ok(x.transpose())
}

/// Regularized pseudo-inverse M^T (M M^T + alpha I)^-1.
///
/// With `regularization == 0` this is the inverse of a square matrix (the
/// zero-forcing channel inversion); with `regularization > 0` it is the
/// MMSE filter and works for any shape.
pub fn pseudo_inverse(m: &RealMatrix, regularization: f64) -> Result<RealMatrix, Error> {
    assert!(regularization >= 0.0, "negative regularization");
    if regularization == 0.0 {
        assert_eq!(m.rows(), m.cols(), "unregularized pseudo-inverse needs a square matrix");
    }
    let n = m.rows();
    let mut gram = m.mat_mul(&m.transpose());
    for i in 0..n {
        gram.set(i, i, gram.get(i, i) + regularization);
    }
    let ginv = cholesky_inverse(&gram)?;
    Ok(m.transpose().mat_mul(&ginv))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
fn cholesky_inverse(g: &RealMatrix) -> Result<RealMatrix, Error> {
    let n = g.rows();
    let mut c = RealMatrix::zeros(n, n); // lower triangular factor
    for j in 0..n {
        let mut d = g.get(j, j);
        for k in 0..j {
            let v = c.get(j, k);
            d -= v * v;
        }
        if d < PIVOT_TOL {
            return Err(Error::Singular { pivot: d });
        }
        let dj = d.sqrt();
        c.set(j, j, dj);
        for i in (j + 1)..n {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= c.get(i, k) * c.get(j, k);
            }
            c.set(i, j, s / dj);
        }
    }

    // Solve C C^T X = I column by column.
    let mut inv = RealMatrix::zeros(n, n);
    let mut y = vec![0.0; n];
    for col in 0..n {
        // Forward: C y = e_col.
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= c.get(i, k) * y[k];
            }
            y[i] = s / c.get(i, i);
        }
        // Backward: C^T x = y.
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= c.get(k, i) * inv.get(k, col);
            }
            inv.set(i, col, s / c.get(i, i));
        }
    }
    Ok(inv)
}

const JACOBI_MAX_SWEEPS: usize = 64;

/// Singular values of a real matrix, descending.
///
/// Jacobi eigen-iteration on M^T M; sizes here never exceed 32x32 so the
/// quadratic-per-sweep cost is irrelevant.
pub fn singular_values(m: &RealMatrix) -> Result<Vec<f64>, Error> {
    let n = m.cols();
    let mut g = m.transpose().mat_mul(m);

    let scale = g.frobenius_norm_sq().sqrt();
    let tol = 1e-14 * scale.max(1.0);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(g.get(p, q).abs());
            }
        }
        if off <= tol {
            let mut sv: Vec<f64> = (0..n).map(|i| g.get(i, i).max(0.0).sqrt()).collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            return Ok(sv);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let gpq = g.get(p, q);
                if gpq.abs() <= tol * 1e-2 {
                    continue;
                }
                let theta = (g.get(q, q) - g.get(p, p)) / (2.0 * gpq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows and columns p, q of the symmetric G.
                for k in 0..n {
                    let gkp = g.get(k, p);
                    let gkq = g.get(k, q);
                    g.set(k, p, c * gkp - s * gkq);
                    g.set(k, q, s * gkp + c * gkq);
                }
                for k in 0..n {
                    let gpk = g.get(p, k);
                    let gqk = g.get(q, k);
                    g.set(p, k, c * gpk - s * gqk);
                    g.set(q, k, s * gpk + c * gqk);
                }
            }
        }
    }
    Err(Error::ConvergenceFailure {
        max_sweeps: JACOBI_MAX_SWEEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    pub(crate) fn random_matrix(n: usize, seed: u64) -> RealMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        RealMatrix::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn qr_identity() {
        let m = RealMatrix::identity(4);
        let f = qr_decompose(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_close(f.q.get(i, j), e, 1e-14);
                assert_close(f.r.get(i, j), e, 1e-14);
            }
        }
    }

    #[test]
    fn qr_permutation_sign_convention() {
        let m = RealMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let f = qr_decompose(&m).unwrap();
        assert!(f.r.get(0, 0) > 0.0 && f.r.get(1, 1) > 0.0);
        let qtq = f.q.transpose().mat_mul(&f.q);
        assert!(qtq.sub(&RealMatrix::identity(2)).frobenius_norm_sq().sqrt() <= 1e-12);
        let rec = f.q.mat_mul(&f.r);
        assert!(rec.sub(&m).frobenius_norm_sq().sqrt() <= 1e-12);
    }

    #[test]
    fn qr_reconstruction_seeded() {
        let m = random_matrix(8, 42);
        let f = qr_decompose(&m).unwrap();
        let rec = f.q.mat_mul(&f.r);
        let rel = rec.sub(&m).frobenius_norm_sq().sqrt() / m.frobenius_norm_sq().sqrt();
        assert!(rel <= 1e-9, "relative reconstruction error {rel}");
    }

    #[test]
    fn qr_corpus_invariants() {
        // 1000 seeded matrices of sizes 2..=16: orthonormality, triangularity,
        // reconstruction, and L R^T = I.
        for trial in 0..1000u64 {
            let n = 2 + (trial % 15) as usize;
            let m = random_matrix(n, 1000 + trial);
            let f = match qr_decompose(&m) {
                Ok(f) => f,
                Err(Error::RankDeficient { .. }) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            };
            let dim = n as f64;
            let qtq = f.q.transpose().mat_mul(&f.q);
            let orth = qtq.sub(&RealMatrix::identity(n)).frobenius_norm_sq().sqrt();
            assert!(orth <= 1e-10 * dim, "orthonormality {orth} at n={n}");
            for i in 0..n {
                assert!(f.r.get(i, i) >= 0.0);
                for j in 0..i {
                    assert!(f.r.get(i, j).abs() <= 1e-12);
                }
            }
            let rec = f.q.mat_mul(&f.r);
            let rel = rec.sub(&m).frobenius_norm_sq().sqrt() / m.frobenius_norm_sq().sqrt();
            assert!(rel <= 1e-9);

            let l = lower_from_r_inverse(&f.r).unwrap();
            let prod = l.mat_mul(&f.r.transpose());
            let err = prod.sub(&RealMatrix::identity(n)).frobenius_norm_sq().sqrt();
            assert!(err <= 1e-9 * dim, "L R^T deviation {err} at n={n}");
        }
    }

    #[test]
    fn lower_from_r_inverse_diagonal() {
        let r = RealMatrix::new(2, 2, vec![2.0, 0.0, 0.0, 4.0]);
        let l = lower_from_r_inverse(&r).unwrap();
        assert_close(l.get(0, 0), 0.5, 1e-15);
        assert_close(l.get(1, 1), 0.25, 1e-15);
        assert_close(l.get(0, 1), 0.0, 1e-15);
        assert_close(l.get(1, 0), 0.0, 1e-15);
    }

    #[test]
    fn lower_from_r_inverse_2x2() {
        // R = [[1,1],[0,1]] -> (R^-1)^T = [[1,0],[-1,1]].
        let r = RealMatrix::new(2, 2, vec![1.0, 1.0, 0.0, 1.0]);
        let l = lower_from_r_inverse(&r).unwrap();
        assert_close(l.get(0, 0), 1.0, 1e-15);
        assert_close(l.get(0, 1), 0.0, 1e-15);
        assert_close(l.get(1, 0), -1.0, 1e-15);
        assert_close(l.get(1, 1), 1.0, 1e-15);
    }

    #[test]
    fn lower_from_r_inverse_identity() {
        let l = lower_from_r_inverse(&RealMatrix::identity(6)).unwrap();
        assert!(l.sub(&RealMatrix::identity(6)).frobenius_norm_sq() <= 1e-24);
    }

    #[test]
    fn rank_deficient_detected() {
        let mut m = random_matrix(4, 7);
        // Duplicate a column.
        for i in 0..4 {
            let v = m.get(i, 0);
            m.set(i, 1, v);
        }
        match qr_decompose(&m) {
            Err(Error::RankDeficient { .. }) => {}
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn pseudo_inverse_trivial() {
        let p = pseudo_inverse(&RealMatrix::identity(4), 0.0).unwrap();
        assert!(p.sub(&RealMatrix::identity(4)).frobenius_norm_sq() <= 1e-20);

        let p = pseudo_inverse(&RealMatrix::identity(2).scale(2.0), 0.0).unwrap();
        assert!(p.sub(&RealMatrix::identity(2).scale(0.5)).frobenius_norm_sq() <= 1e-20);

        // (I + I)^-1 = I/2.
        let p = pseudo_inverse(&RealMatrix::identity(2), 1.0).unwrap();
        assert!(p.sub(&RealMatrix::identity(2).scale(0.5)).frobenius_norm_sq() <= 1e-20);
    }

    #[test]
    fn pseudo_inverse_is_inverse_for_well_conditioned() {
        for trial in 0..200u64 {
            let n = 2 + (trial % 10) as usize;
            let m = random_matrix(n, 5000 + trial);
            let sv = singular_values(&m).unwrap();
            let cond = sv[0] / sv[n - 1].max(1e-300);
            if cond >= 1e6 {
                continue;
            }
            let p = pseudo_inverse(&m, 0.0).unwrap();
            let err = p.mat_mul(&m).sub(&RealMatrix::identity(n)).frobenius_norm_sq().sqrt();
            assert!(err <= 1e-8, "inverse residual {err} (cond {cond})");
        }
    }

    #[test]
    fn singular_values_diagonal() {
        let m = RealMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]);
        let sv = singular_values(&m).unwrap();
        assert_close(sv[0], 3.0, 1e-12);
        assert_close(sv[1], 1.0, 1e-12);
    }

    #[test]
    fn singular_values_antidiagonal() {
        // M^T M = diag(1, 4) -> singular values {2, 1}.
        let m = RealMatrix::new(2, 2, vec![0.0, 2.0, 1.0, 0.0]);
        let sv = singular_values(&m).unwrap();
        assert_close(sv[0], 2.0, 1e-12);
        assert_close(sv[1], 1.0, 1e-12);
    }

    #[test]
    fn singular_values_frobenius_identity() {
        for trial in 0..300u64 {
            let n = 2 + (trial % 12) as usize;
            let m = random_matrix(n, 9000 + trial);
            let sv = singular_values(&m).unwrap();
            for w in sv.windows(2) {
                assert!(w[0] >= w[1], "not descending");
            }
            let sum: f64 = sv.iter().map(|s| s * s).sum();
            let fro = m.frobenius_norm_sq();
            assert!((sum - fro).abs() <= 1e-9 * fro.max(1.0), "{sum} vs {fro}");
        }
    }

    #[test]
    fn frobenius_examples() {
        assert_close(RealMatrix::identity(4).frobenius_norm_sq(), 4.0, 0.0);
        assert_close(RealMatrix::zeros(3, 3).frobenius_norm_sq(), 0.0, 0.0);
        let m = RealMatrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert_close(m.frobenius_norm_sq(), 10.0, 0.0);
    }
}
