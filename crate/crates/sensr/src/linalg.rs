//! Dense real linear algebra on row-major `f64` matrices.
//!
//! Only what the rest of the crate needs: products, Householder QR with
//! column pivoting, one-sided Jacobi SVD, cyclic Jacobi for symmetric
//! eigenproblems and a principal-angle helper for comparing subspaces.

use std::fmt;

use crate::error::{check_dim, Error, Result};

/// Relative magnitude below which a pivot or singular value counts as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

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

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in diag.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
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

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(n, cols, data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        for c in columns {
            check_dim(rows, c.len())?;
        }
        let m = Self::from_fn(rows, cols, |i, j| columns[j][i]);
        Self::new(rows, cols, m.data)
    }

    /// Wraps raw storage without the finiteness scan; for internal hot paths.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
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

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm_acc(self, other, &mut out);
        Ok(out)
    }

    /// `self · otherᵀ`, i.e. all pairwise row dot products.
    pub fn matmul_transpose(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.cols)?;
        let mut out = Matrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn transpose_matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a = self.row(k);
            let b = other.row(k);
            for (i, &aki) in a.iter().enumerate() {
                if aki == 0.0 {
                    continue;
                }
                axpy(aki, b, &mut out.data[i * other.cols..(i + 1) * other.cols]);
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x`.
    pub fn transpose_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, x.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * s).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_raw(indices.len(), self.cols, data)
    }

    pub fn leading_columns(&self, k: usize) -> Matrix {
        let k = k.min(self.cols);
        Matrix::from_fn(self.rows, k, |i, j| self.get(i, j))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[Matrix]) -> Result<Matrix> {
        let cols = parts.first().map_or(0, Matrix::cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            check_dim(cols, p.cols)?;
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Matrix::from_raw(rows, cols, data))
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hstack(parts: &[Matrix]) -> Result<Matrix> {
        let rows = parts.first().map_or(0, Matrix::rows);
        for p in parts {
            check_dim(rows, p.rows)?;
        }
        let cols: usize = parts.iter().map(Matrix::cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(Matrix::from_raw(rows, cols, data))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }
}

/// `c += a · b`, four rows of `a` at a time. Each entry accumulates over
/// the inner index in increasing order.
pub(crate) fn gemm_acc(a: &Matrix, b: &Matrix, c: &mut Matrix) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!((a.rows, b.cols), (c.rows, c.cols));
    let (n, k) = (b.cols, a.cols);
    if n == 0 {
        return;
    }
    let mut blocks = c.data.chunks_exact_mut(4 * n);
    let mut i = 0;
    for block in blocks.by_ref() {
        let (c0, rest) = block.split_at_mut(n);
        let (c1, rest) = rest.split_at_mut(n);
        let (c2, c3) = rest.split_at_mut(n);
        let (a0, a1, a2, a3) = (a.row(i), a.row(i + 1), a.row(i + 2), a.row(i + 3));
        for p in 0..k {
            let bp = b.row(p);
            let (x0, x1, x2, x3) = (a0[p], a1[p], a2[p], a3[p]);
            for j in 0..n {
                let v = bp[j];
                c0[j] += x0 * v;
                c1[j] += x1 * v;
                c2[j] += x2 * v;
                c3[j] += x3 * v;
            }
        }
        i += 4;
    }
    for (r, ci) in blocks.into_remainder().chunks_exact_mut(n).enumerate() {
        let ai = a.row(i + r);
        for (p, &x) in ai.iter().enumerate() {
            axpy(x, b.row(p), ci);
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a·x`.
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Householder reflector data for one column: `H = I − 2vvᵀ` acting on rows `k..`.
struct Reflector {
    k: usize,
    v: Vec<f64>,
}

impl Reflector {
    /// Applies `H` to columns `col_from..` of `a` (rows `k..`).
    fn apply_left(&self, a: &mut Matrix, col_from: usize) {
        let cols = a.cols;
        for j in col_from..cols {
            let mut s = 0.0;
            for (t, vt) in self.v.iter().enumerate() {
                s += vt * a.data[(self.k + t) * cols + j];
            }
            if s == 0.0 {
                continue;
            }
            s *= 2.0;
            for (t, vt) in self.v.iter().enumerate() {
                a.data[(self.k + t) * cols + j] -= s * vt;
            }
        }
    }
}

/// Builds the reflector that zeroes `x[1..]`, returning it with the new
/// leading entry. `None` when `x` is already zero.
fn householder(k: usize, x: &[f64]) -> Option<(Reflector, f64)> {
    let nx = norm(x);
    if nx == 0.0 {
        return None;
    }
    let alpha = if x[0] >= 0.0 { -nx } else { nx };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let nv = norm(&v);
    if nv == 0.0 {
        return None;
    }
    v.iter_mut().for_each(|t| *t /= nv);
    Some((Reflector { k, v }, alpha))
}

/// Orthonormal basis of the column space of `m`.
///
/// Householder QR with column pivoting; trailing pivots below
/// [`RANK_TOLERANCE`] times the leading pivot are treated as zero, so the
/// returned matrix has exactly `rank(m)` columns (possibly zero).
pub fn qr_orthonormal(m: &Matrix) -> Result<Matrix> {
    if m.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let steps = rows.min(cols);
    let mut reflectors = Vec::with_capacity(steps);
    let mut leading = 0.0f64;
    for k in 0..steps {
        // pivot: remaining column with the largest residual norm
        let (mut best, mut best_norm) = (k, -1.0);
        for j in k..cols {
            let s: f64 = (k..rows).map(|i| a.get(i, j).powi(2)).sum();
            if s > best_norm {
                best = j;
                best_norm = s;
            }
        }
        let best_norm = best_norm.sqrt();
        if k == 0 {
            leading = best_norm;
        }
        if best_norm == 0.0 || best_norm < RANK_TOLERANCE * leading {
            break;
        }
        if best != k {
            for i in 0..rows {
                a.data.swap(i * cols + k, i * cols + best);
            }
        }
        let x: Vec<f64> = (k..rows).map(|i| a.get(i, k)).collect();
        let Some((h, _)) = householder(k, &x) else {
            break;
        };
        h.apply_left(&mut a, k);
        reflectors.push(h);
    }
    let rank = reflectors.len();
    let mut q = Matrix::from_fn(rows, rank, |i, j| if i == j { 1.0 } else { 0.0 });
    for h in reflectors.iter().rev() {
        h.apply_left(&mut q, 0);
    }
    Ok(q)
}

/// Upper-triangular factor `R` (cols × cols) of a tall matrix, unpivoted.
fn householder_r(m: &Matrix) -> Matrix {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    for k in 0..cols.min(rows) {
        let x: Vec<f64> = (k..rows).map(|i| a.get(i, k)).collect();
        if let Some((h, _)) = householder(k, &x) {
            h.apply_left(&mut a, k);
        }
    }
    Matrix::from_fn(cols, cols, |i, j| if j >= i && i < rows { a.get(i, j) } else { 0.0 })
}

/// Leading singular triplets (values and right vectors) of a matrix.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
    /// `cols × k`, orthonormal columns.
    pub right_vectors: Matrix,
}

/// Top-`k` singular values and right singular vectors of `m`.
///
/// Tall inputs are first reduced to their `R` factor (same right singular
/// vectors); the square or wide remainder goes through one-sided Jacobi.
pub fn truncated_svd(m: &Matrix, k: usize) -> Result<TruncatedSvd> {
    if m.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k == 0 {
        return Err(Error::invalid("truncated_svd needs k >= 1"));
    }
    if k > m.rows.min(m.cols) {
        return Err(Error::invalid(format!(
            "k = {k} exceeds min(rows, cols) = {}",
            m.rows.min(m.cols)
        )));
    }
    if m.rows >= m.cols {
        let work = if m.rows > m.cols { householder_r(m) } else { m.clone() };
        let (values, vectors) = one_sided_jacobi(&work)?;
        return Ok(TruncatedSvd {
            singular_values: values[..k].to_vec(),
            right_vectors: vectors.leading_columns(k),
        });
    }
    // Wide: the right singular vectors of m are the left ones of mᵀ, i.e. the
    // normalized columns of mᵀV.
    let mt = m.transpose();
    let work = householder_r(&mt);
    let (values, vectors) = one_sided_jacobi(&work)?;
    let left = mt.matmul(&vectors.leading_columns(k))?;
    let top = values[0];
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        if values[j] > RANK_TOLERANCE * top && top > 0.0 {
            columns.push(left.column(j).iter().map(|v| v / values[j]).collect());
        }
    }
    complete_orthonormal(&mut columns, m.cols, k);
    Ok(TruncatedSvd {
        singular_values: values[..k].to_vec(),
        right_vectors: Matrix::from_columns(&columns)?,
    })
}

/// Extends orthonormal `columns` to `k` vectors using coordinate axes.
fn complete_orthonormal(columns: &mut Vec<Vec<f64>>, dim: usize, k: usize) {
    let mut axis = 0;
    while columns.len() < k && axis < dim {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        axis += 1;
        for _ in 0..2 {
            for c in columns.iter() {
                let p = dot(c, &v);
                axpy(-p, c, &mut v);
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            columns.push(v);
        }
    }
}

/// Hestenes one-sided Jacobi. Returns all singular values (descending) and the
/// matching right singular vectors as columns.
fn one_sided_jacobi(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.cols;
    // work on columns stored contiguously
    let mut w = m.transpose();
    let mut v = Matrix::identity(n);
    let p = m.rows;
    let scale: f64 = (0..n).map(|i| dot(w.row(i), w.row(i))).fold(0.0, f64::max);
    let negligible = scale * 1e-30;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (wi, wj) = (w.row(i), w.row(j));
                let alpha = dot(wi, wi);
                let beta = dot(wj, wj);
                let gamma = dot(wi, wj);
                if alpha <= negligible || beta <= negligible || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut w, i, j, c, s, p);
                rotate_rows(&mut v, i, j, c, s, n);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdNotConverged);
    }
    let norms: Vec<f64> = (0..n).map(|i| norm(w.row(i))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| norms[i]).collect();
    // rows of v are the rotated basis vectors
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(order[c], r));
    Ok((values, vectors))
}

fn rotate_rows(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64, len: usize) {
    let cols = m.cols;
    debug_assert_eq!(cols, len);
    let (lo, hi) = m.data.split_at_mut(j * cols);
    let ri = &mut lo[i * cols..(i + 1) * cols];
    let rj = &mut hi[..cols];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in nonincreasing order with eigenvectors as columns.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if m.is_empty() {
        return Err(Error::EmptyInput);
    }
    check_dim(m.rows, m.cols)?;
    let n = m.rows;
    let mut a = m.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a.get(k, p), a.get(k, q));
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::SvdNotConverged);
    }
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diag[y].total_cmp(&diag[x]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok((values, vectors))
}

/// Largest principal angle (radians) between `span(a)` and `span(b)`, both
/// given by orthonormal columns. Computed as `asin ‖(I − BBᵀ)A‖₂`, which
/// stays accurate for tiny angles.
pub fn largest_principal_angle(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_dim(a.rows, b.rows)?;
    let proj = b.transpose_matmul(a)?;
    let residual = a.sub(&b.matmul(&proj)?)?;
    let sigma = truncated_svd(&residual, 1)?.singular_values[0];
    Ok(sigma.min(1.0).asin())
}
