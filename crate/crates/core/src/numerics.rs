//! Dense linear algebra primitives and deterministic random-number streams.
//!
//! Everything is double precision. The only nontrivial solver is
//! [`spd_solve`], the damped symmetric solve used to apply the (pseudo-)
//! inverse of the Gram matrix in natural-gradient preconditioning: Cholesky
//! first, with an eigendecomposition fallback for matrices that are
//! numerically rank-deficient.

use crate::parallel;

/// Errors from the linear algebra and RNG primitives.
#[derive(Debug, thiserror::Error)]
pub enum NumericsError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is not positive-definite (damping = {damping})")]
    NotPositiveDefinite { damping: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("invalid uniform range: lo = {lo} must be < hi = {hi}")]
    InvalidRange { lo: f64, hi: f64 },
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Wraps an existing row-major buffer; `data.len()` must equal `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::Shape(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// `A x` (deterministic, parallel over rows).
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if x.len() != self.cols {
            return Err(NumericsError::Shape(format!(
                "mul_vec: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(parallel::map_range(self.rows, |i| {
            dot(self.row(i), x)
        }))
    }

    /// `Aᵀ x` with an ordered chunked reduction over rows.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if x.len() != self.rows {
            return Err(NumericsError::Shape(format!(
                "tr_mul_vec: {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok(parallel::sum_vectors(self.rows, self.cols, |i, acc| {
            let xi = x[i];
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a = xi * v;
            }
        }))
    }

    /// `scale · AᵀA`, assembled in deterministic row blocks. This is the hot
    /// product behind the Fisher/Gram matrix; each output row block is one
    /// `dgemm` call, so the result is identical for any thread count.
    pub fn gram_scaled(&self, scale: f64) -> DenseMatrix {
        let n = self.cols;
        let k = self.rows;
        let mut g = DenseMatrix::zeros(n, n);
        let a = &self.data;
        parallel::for_chunks_mut(&mut g.data, parallel::BLOCK_ROWS * n, |blk, out| {
            let i0 = blk * parallel::BLOCK_ROWS;
            let w = out.len() / n;
            // out = (A[:, i0..i0+w])ᵀ · A, shape w×N.
            unsafe {
                matrixmultiply::dgemm(
                    w,
                    k,
                    n,
                    scale,
                    a.as_ptr().add(i0),
                    1,
                    n as isize,
                    a.as_ptr(),
                    n as isize,
                    1,
                    0.0,
                    out.as_mut_ptr(),
                    n as isize,
                    1,
                );
            }
        });
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `(A + damping·I) x = b` for symmetric `A`.
///
/// Cholesky first; if the factorization breaks down (the Gram matrix can be
/// numerically rank-deficient), falls back to a Jacobi eigendecomposition and
/// applies the clipped pseudo-inverse of the damped matrix. Signals failure
/// when the damped matrix is not positive-definite, e.g. zero damping on a
/// singular or indefinite `A`.
pub fn spd_solve(a: &DenseMatrix, b: &[f64], damping: f64) -> Result<Vec<f64>, NumericsError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(NumericsError::Shape(format!("spd_solve: {}x{} matrix is not square", a.rows(), a.cols())));
    }
    if b.len() != n {
        return Err(NumericsError::Shape(format!("spd_solve: rhs of length {} for order {n}", b.len())));
    }
    if !(damping >= 0.0) {
        return Err(NumericsError::Shape(format!("spd_solve: damping {damping} must be nonnegative")));
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite("spd_solve input"));
    }

    let mut damped = a.clone();
    for i in 0..n {
        let v = damped.get(i, i) + damping;
        damped.set(i, i, v);
    }
    if let Some(chol) = cholesky(&damped) {
        return Ok(cholesky_solve(&chol, b));
    }

    // Rank-deficient or marginally indefinite: clipped eigen pseudo-inverse.
    let (eigvals, eigvecs) = jacobi_eigh(&damped);
    let max_abs = eigvals.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let tol = 1e-12 * max_abs.max(1e-300);
    if eigvals.iter().any(|&l| l < -tol) || eigvals.iter().all(|&l| l <= tol) {
        return Err(NumericsError::NotPositiveDefinite { damping });
    }
    if damping == 0.0 && eigvals.iter().any(|&l| l <= tol) {
        return Err(NumericsError::NotPositiveDefinite { damping });
    }
    // x = V diag(1/λ) Vᵀ b, dropping clipped directions.
    let mut vt_b = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..n {
            s += eigvecs.get(i, j) * b[i];
        }
        vt_b[j] = if eigvals[j] > tol { s / eigvals[j] } else { 0.0 };
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += eigvecs.get(i, j) * vt_b[j];
        }
        x[i] = s;
    }
    Ok(x)
}

/// Damped Cholesky solve without the eigen fallback: `None` on breakdown.
/// Cheap probe used by the Gauss-Newton damping ladder.
pub(crate) fn cholesky_solve_damped(a: &DenseMatrix, b: &[f64], damping: f64) -> Option<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return None;
    }
    let mut damped = a.clone();
    for i in 0..n {
        let v = damped.get(i, i) + damping;
        damped.set(i, i, v);
    }
    cholesky(&damped).map(|l| cholesky_solve(&l, b))
}

/// Lower-triangular Cholesky factor, or `None` on breakdown.
fn cholesky(a: &DenseMatrix) -> Option<DenseMatrix> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l.get(i, k) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l.get(k, i) * y[k];
        }
        y[i] /= l.get(i, i);
    }
    y
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns (eigenvalues, eigenvectors as columns).
pub(crate) fn jacobi_eigh(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity(n);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m.get(p, q).powi(2);
            }
        }
        let scale: f64 = (0..n).map(|i| m.get(i, i).powi(2)).sum::<f64>() + 2.0 * off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eig = (0..n).map(|i| m.get(i, i)).collect();
    (eig, v)
}

/// Deterministic, seekable random stream. A `(seed, stream_index)` pair fully
/// determines the sequence, and distinct stream indices can be handed to
/// independent workers without coordination (counter-based generator).
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    rng: rand_chacha::ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self { seed, stream_index, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Fresh stream with the same seed and a different stream index.
    pub fn derive(&self, stream_index: u64) -> Self {
        Self::new(self.seed, stream_index)
    }

    /// `n` doubles uniform in `[lo, hi)`, advancing the stream.
    pub fn uniform(&mut self, n: usize, lo: f64, hi: f64) -> Result<Vec<f64>, NumericsError> {
        if !(lo < hi) {
            return Err(NumericsError::InvalidRange { lo, hi });
        }
        use rand::distributions::Distribution;
        let dist = rand::distributions::Uniform::new(lo, hi);
        Ok((0..n).map(|_| dist.sample(&mut self.rng)).collect())
    }

    /// One uniform double in `[lo, hi)`; caller guarantees `lo < hi`.
    pub fn uniform_one(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::distributions::Distribution;
        rand::distributions::Uniform::new(lo, hi).sample(&mut self.rng)
    }

    /// Uniform index in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        use rand::Rng;
        self.rng.gen_range(0..n)
    }
}
