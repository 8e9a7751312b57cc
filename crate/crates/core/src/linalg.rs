//! Self-contained dense linear algebra: row-major matrices, Householder QR,
//! least-norm solves and spectral-norm estimation.
//!
//! Everything here is sized for desk-scale compressed-sensing instances
//! (thousands of rows/columns), stored dense. There is no pivoting: the
//! matrices we factor are random Gaussian designs, which are full rank with
//! probability one, and rank deficiency is reported as an error instead of
//! being repaired.

use crate::error::Error;

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if the length does not
    /// match `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `A x` for `x` of length `cols`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for (i, oi) in out.iter_mut().enumerate() {
            *oi = dot(self.row(i), x);
        }
        out
    }

    /// `A^T y` for `y` of length `rows`.
    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "matvec_transpose dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (o, &aij) in out.iter_mut().zip(row) {
                *o += aij * yi;
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &aij) in sq.iter_mut().zip(self.row(i)) {
                *s += aij * aij;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Divides each column by the given scale (in place). Zero scales leave
    /// the column untouched.
    pub fn scale_columns(&mut self, scales: &[f64]) {
        assert_eq!(scales.len(), self.cols);
        for i in 0..self.rows {
            let base = i * self.cols;
            for (j, &s) in scales.iter().enumerate() {
                if s != 0.0 {
                    self.data[base + j] /= s;
                }
            }
        }
    }

    /// Multiplies each row by the given factor (in place).
    pub fn scale_rows(&mut self, factors: &[f64]) {
        assert_eq!(factors.len(), self.rows);
        for (i, &f) in factors.iter().enumerate() {
            for v in &mut self.data[i * self.cols..(i + 1) * self.cols] {
                *v *= f;
            }
        }
    }
}

// Small vector helpers shared across the crate.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kahan-compensated sum. The solvers' descent tests compare objective
/// values whose difference can sit many orders below the plain-summation
/// noise floor; compensation keeps those comparisons meaningful.
#[inline]
pub fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    compensated_sum(a.iter().map(|x| x * x)).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `(1 - t) * a + t * b`
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - t) * x + t * y)
        .collect()
}

/// Thin Householder QR factorization of a `rows x cols` matrix with
/// `rows >= cols`.
///
/// The reflectors are stored as unit vectors `v_j` acting on rows `j..`,
/// so `Q = H_0 H_1 ... H_{cols-1}` with `H_j = I - 2 v_j v_j^T`.
#[derive(Clone, Debug)]
pub struct QRFactorization {
    reflectors: Vec<Vec<f64>>,
    r: DenseMatrix,
    source_shape: (usize, usize),
}

impl QRFactorization {
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn source_shape(&self) -> (usize, usize) {
        self.source_shape
    }

    /// Applies `Q^T` to a vector of length `rows`; the first `cols` entries
    /// of the result are the thin-`Q^T` image.
    pub fn apply_qt(&self, y: &[f64]) -> Vec<f64> {
        let (rows, _) = self.source_shape;
        assert_eq!(y.len(), rows);
        let mut out = y.to_vec();
        for (j, v) in self.reflectors.iter().enumerate() {
            reflect(v, &mut out[j..]);
        }
        out
    }

    /// Applies the thin `Q` (`rows x cols`) to a vector of length `cols`.
    pub fn apply_q(&self, z: &[f64]) -> Vec<f64> {
        let (rows, cols) = self.source_shape;
        assert_eq!(z.len(), cols);
        let mut out = vec![0.0; rows];
        out[..cols].copy_from_slice(z);
        for (j, v) in self.reflectors.iter().enumerate().rev() {
            reflect(v, &mut out[j..]);
        }
        out
    }

    /// Materializes the thin `Q` factor (`rows x cols`).
    pub fn q_matrix(&self) -> DenseMatrix {
        let (rows, cols) = self.source_shape;
        let mut q = DenseMatrix::zeros(rows, cols);
        for j in 0..cols {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            let col = self.apply_q(&e);
            for (i, &v) in col.iter().enumerate() {
                q.set(i, j, v);
            }
        }
        q
    }

    /// Solves `R x = b` by back substitution (`b` of length `cols`).
    pub fn solve_r(&self, b: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.r.get(i, j) * x[j];
            }
            x[i] /= self.r.get(i, i);
        }
        x
    }

    /// Solves `R^T x = b` by forward substitution (`b` of length `cols`).
    pub fn solve_r_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.r.get(j, i) * x[j];
            }
            x[i] /= self.r.get(i, i);
        }
        x
    }
}

/// Applies `I - 2 v v^T` to `x` in place (`v` unit length, same length as `x`).
#[inline]
fn reflect(v: &[f64], x: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let c = 2.0 * dot(v, x);
    if c != 0.0 {
        axpy(-c, v, x);
    }
}

/// Thin Householder QR of `m` (`rows >= cols`).
///
/// Fails with [`Error::RankDeficient`] when a diagonal entry of `R` falls
/// below `1e-12` times the Frobenius norm of the input, which in this crate
/// signals a degenerate random instance rather than a recoverable state.
pub fn householder_qr(m: &DenseMatrix) -> Result<QRFactorization, Error> {
    let (rows, cols) = (m.rows(), m.cols());
    assert!(rows >= cols, "householder_qr requires rows >= cols");
    let scale_ref = m.frobenius_norm();
    let mut work = m.clone();
    let mut reflectors = Vec::with_capacity(cols);

    for j in 0..cols {
        // Column j at and below the diagonal.
        let mut v: Vec<f64> = (j..rows).map(|i| work.get(i, j)).collect();
        let x_norm = norm(&v);
        if x_norm > 0.0 {
            // Choose the sign that avoids cancellation in v[0].
            let alpha = if v[0] >= 0.0 { -x_norm } else { x_norm };
            v[0] -= alpha;
            let v_norm = norm(&v);
            if v_norm > 0.0 {
                for vi in &mut v {
                    *vi /= v_norm;
                }
                // Apply the reflector to the remaining columns.
                for c in j..cols {
                    let mut col: Vec<f64> = (j..rows).map(|i| work.get(i, c)).collect();
                    reflect(&v, &mut col);
                    for (off, val) in col.into_iter().enumerate() {
                        work.set(j + off, c, val);
                    }
                }
            } else {
                v = vec![0.0; rows - j];
            }
        } else {
            v = vec![0.0; rows - j];
        }
        reflectors.push(v);
    }

    let mut r = DenseMatrix::zeros(cols, cols);
    for i in 0..cols {
        for j in i..cols {
            r.set(i, j, work.get(i, j));
        }
    }

    for i in 0..cols {
        let rii = r.get(i, i);
        if rii.abs() <= 1e-12 * scale_ref {
            return Err(Error::RankDeficient {
                pivot: i,
                value: rii,
            });
        }
    }

    Ok(QRFactorization {
        reflectors,
        r,
        source_shape: (rows, cols),
    })
}

/// Least-norm solution of `a x = b` for a full-row-rank `a` (`p x n`, `p <= n`):
/// `x = a^T (a a^T)^{-1} b`, computed via the thin QR of `a^T`.
pub fn least_norm_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, Error> {
    assert_eq!(b.len(), a.rows(), "right-hand side length mismatch");
    let qr = householder_qr(&a.transpose())?;
    let w = qr.solve_r_transpose(b);
    Ok(qr.apply_q(&w))
}

/// As [`least_norm_solution`] but reusing an existing factorization of `a^T`.
pub fn least_norm_from_qr(qr: &QRFactorization, b: &[f64]) -> Vec<f64> {
    let w = qr.solve_r_transpose(b);
    qr.apply_q(&w)
}

/// Largest singular value of `a`, estimated by power iteration on `a^T a`.
///
/// Runs until the estimate changes by less than `tol` (relative) or 500
/// iterations, whichever comes first. A zero matrix yields 0.
pub fn spectral_norm(a: &DenseMatrix, tol: f64) -> f64 {
    let n = a.cols();
    if n == 0 || a.rows() == 0 {
        return 0.0;
    }
    // Deterministic pseudo-random start vector; avoids adversarial
    // orthogonality to the leading singular space.
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        })
        .collect();
    let v_norm = norm(&v);
    if v_norm == 0.0 {
        return 0.0;
    }
    for vi in &mut v {
        *vi /= v_norm;
    }

    let mut sigma = 0.0;
    for _ in 0..500 {
        let u = a.matvec(&v);
        let new_sigma = norm(&u);
        if new_sigma == 0.0 {
            return 0.0;
        }
        let w = a.matvec_transpose(&u);
        let w_norm = norm(&w);
        if w_norm == 0.0 {
            return new_sigma;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / w_norm;
        }
        if (new_sigma - sigma).abs() <= tol * new_sigma {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}
