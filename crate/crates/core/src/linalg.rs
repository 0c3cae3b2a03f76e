//! Complex linear algebra kernel.
//!
//! Dense matrices cover single- and two-qubit objects (Kraus factors, Pauli
//! matrices, partial transposes, Fock-space generators). Sparse states cover
//! n-qubit vectors such as codewords and their corrupted images.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub type C64 = Complex64;

/// Amplitudes with modulus below this are dropped from sparse states.
pub const PRUNE_TOL: f64 = 1e-14;

/// Largest row or column count a dense matrix may have.
pub const MAX_DENSE_DIM: usize = 1 << 12;

/// Residual norm below which a completion candidate is discarded.
pub const COMPLETION_SKIP_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} exceeds the dense limit {MAX_DENSE_DIM}")]
    DimensionLimit(usize),
    #[error("entry count {got} does not match shape {rows}x{cols}")]
    BadShape { rows: usize, cols: usize, got: usize },
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix has an eigenvalue {0:e} below the negative rank tolerance")]
    NotPositive(f64),
    #[error("input vectors are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("basis completion produced {found} vectors, expected {expected}")]
    CompletionFailed { found: usize, expected: usize },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows > MAX_DENSE_DIM || cols > MAX_DENSE_DIM {
            return Err(LinalgError::DimensionLimit(rows.max(cols)));
        }
        if data.len() != rows * cols {
            return Err(LinalgError::BadShape { rows, cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c).conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.get(r, c);
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(self.cols, other.rows));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(self.rows * self.cols, other.rows * other.cols));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Applies the matrix to a dense column vector.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(self.cols, v.len()));
        }
        Ok((0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = a.rows.checked_mul(b.rows).ok_or(LinalgError::DimensionLimit(usize::MAX))?;
    let cols = a.cols.checked_mul(b.cols).ok_or(LinalgError::DimensionLimit(usize::MAX))?;
    if rows > MAX_DENSE_DIM || cols > MAX_DENSE_DIM {
        return Err(LinalgError::DimensionLimit(rows.max(cols)));
    }
    let mut out = DenseMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a.get(ar, ac);
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out.set(ar * b.rows + br, ac * b.cols + bc, x * b.get(br, bc));
                }
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Eigenvalues are returned in descending order; column `j` of the returned
/// matrix is the eigenvector for eigenvalue `j`.
pub fn hermitian_eig(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.rows, m.cols));
    }
    let defect = m.hermiticity_defect();
    if defect > 1e-12 * m.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian(defect));
    }
    let n = m.rows;
    let mut a = m.clone();
    for i in 0..n {
        let d = a.get(i, i).re;
        a.set(i, i, C64::new(d, 0.0));
    }
    let mut v = DenseMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = D R with D = diag(1, conj(phase)) on (p, q).
                let jpp = C64::new(c, 0.0);
                let jpq = C64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // A <- A J
                for r in 0..n {
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, arp * jpp + arq * jqp);
                    a.set(r, q, arp * jpq + arq * jqq);
                }
                // A <- J† A
                for col in 0..n {
                    let apc = a.get(p, col);
                    let aqc = a.get(q, col);
                    a.set(p, col, jpp.conj() * apc + jqp.conj() * aqc);
                    a.set(q, col, jpq.conj() * apc + jqq.conj() * aqc);
                }
                a.set(p, q, C64::new(0.0, 0.0));
                a.set(q, p, C64::new(0.0, 0.0));
                let dp = a.get(p, p).re;
                let dq = a.get(q, q).re;
                a.set(p, p, C64::new(dp, 0.0));
                a.set(q, q, C64::new(dq, 0.0));
                for r in 0..n {
                    let vrp = v.get(r, p);
                    let vrq = v.get(r, q);
                    v.set(r, p, vrp * jpp + vrq * jqp);
                    v.set(r, q, vrp * jpq + vrq * jqq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).re.total_cmp(&a.get(i, i).re));
    let values = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_col, v.get(r, old_col));
        }
    }
    Ok((values, vectors))
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &DenseMatrix, f: impl Fn(f64) -> f64) -> Result<DenseMatrix> {
    let (values, vecs) = hermitian_eig(m)?;
    let n = values.len();
    let mut out = DenseMatrix::zeros(n, n);
    for (k, &lam) in values.iter().enumerate() {
        let fk = f(lam);
        if fk == 0.0 {
            continue;
        }
        for r in 0..n {
            let vr = vecs.get(r, k) * fk;
            for c in 0..n {
                let cur = out.get(r, c);
                out.set(r, c, cur + vr * vecs.get(c, k).conj());
            }
        }
    }
    Ok(out)
}

/// Pseudo-inverse square root of a positive semidefinite matrix.
pub fn inv_sqrt_psd(m: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let (values, _) = hermitian_eig(m)?;
    if let Some(&low) = values.last() {
        if low < -rank_tol {
            return Err(LinalgError::NotPositive(low));
        }
    }
    hermitian_function(m, |x| if x >= rank_tol { 1.0 / x.sqrt() } else { 0.0 })
}

/// Matrix exponential by scaling and squaring with a degree-12 Taylor polynomial.
pub fn expm(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.rows, m.cols));
    }
    let norm = m.norm_one();
    let mut squarings = 0u32;
    while norm / f64::from(1u32 << squarings.min(30)) > 0.5 && squarings < 60 {
        squarings += 1;
    }
    let scaled = m.scale(C64::new(0.5f64.powi(squarings as i32), 0.0));
    let n = m.rows;
    let mut result = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    for k in 1..=12u32 {
        term = term.matmul(&scaled)?.scale(C64::new(1.0 / f64::from(k), 0.0));
        result = result.add(&term)?;
    }
    for _ in 0..squarings {
        result = result.matmul(&result)?;
    }
    Ok(result)
}

/// Upper bound on the error of [`expm`] for a matrix of 1-norm `norm`.
///
/// The degree-12 Taylor step on `A/2^s` errs by at most `x^13/13!·e^x` with
/// `x = norm/2^s`; squaring `s` times amplifies this by at most `2^s·e^norm`.
pub fn expm_error_bound(norm: f64) -> f64 {
    let mut squarings = 0u32;
    while norm / f64::from(1u32 << squarings.min(30)) > 0.5 && squarings < 60 {
        squarings += 1;
    }
    let x = norm * 0.5f64.powi(squarings as i32);
    let fact13: f64 = (1..=13).map(f64::from).product();
    x.powi(13) / fact13 * x.exp() * 2f64.powi(squarings as i32) * norm.exp()
}

/// Sparse complex vector in a space of dimension `dim` with sorted, unique indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseState {
    dim: usize,
    terms: Vec<(usize, C64)>,
}

impl SparseState {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(LinalgError::IndexOutOfRange { index, dim });
        }
        Ok(Self { dim, terms: vec![(index, C64::new(1.0, 0.0))] })
    }

    /// Builds a state from unordered terms, summing duplicates and pruning tiny amplitudes.
    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (usize, C64)>) -> Result<Self> {
        let mut raw: Vec<(usize, C64)> = terms.into_iter().collect();
        if let Some(&(index, _)) = raw.iter().find(|(i, _)| *i >= dim) {
            return Err(LinalgError::IndexOutOfRange { index, dim });
        }
        raw.sort_unstable_by_key(|t| t.0);
        let mut merged: Vec<(usize, C64)> = Vec::with_capacity(raw.len());
        for (i, a) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => merged.push((i, a)),
            }
        }
        merged.retain(|t| t.1.norm() >= PRUNE_TOL);
        Ok(Self { dim, terms: merged })
    }

    /// Wraps terms that are already sorted, unique and pruned.
    pub(crate) fn from_sorted_unchecked(dim: usize, terms: Vec<(usize, C64)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        Self { dim, terms }
    }

    pub fn from_dense(v: &[C64]) -> Self {
        let terms = v.iter().enumerate().filter(|(_, a)| a.norm() >= PRUNE_TOL).map(|(i, &a)| (i, a)).collect();
        Self { dim: v.len(), terms }
    }

    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim];
        for &(i, a) in &self.terms {
            out[i] = a;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(usize, C64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        match self.terms.binary_search_by_key(&index, |t| t.0) {
            Ok(pos) => self.terms[pos].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Unit vector along `self`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 {
            return None;
        }
        Some(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        let terms = self.terms.iter().map(|&(i, a)| (i, a * s)).filter(|t| t.1.norm() >= PRUNE_TOL).collect();
        Self { dim: self.dim, terms }
    }

    /// Returns `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: C64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch(self.dim, other.dim));
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < other.terms.len() {
            let next = match (self.terms.get(i), other.terms.get(j)) {
                (Some(&(ia, a)), Some(&(ib, b))) if ia == ib => {
                    i += 1;
                    j += 1;
                    (ia, a + s * b)
                }
                (Some(&(ia, a)), Some(&(ib, _))) if ia < ib => {
                    i += 1;
                    (ia, a)
                }
                (Some(&(ia, a)), None) => {
                    i += 1;
                    (ia, a)
                }
                (_, Some(&(ib, b))) => {
                    j += 1;
                    (ib, s * b)
                }
                (None, None) => unreachable!(),
            };
            if next.1.norm() >= PRUNE_TOL {
                out.push(next);
            }
        }
        Ok(Self { dim: self.dim, terms: out })
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        inner(self, other)
    }

    /// ⟨self|v⟩ against a dense vector of the same dimension.
    pub fn inner_dense(&self, v: &[C64]) -> C64 {
        self.terms.iter().map(|&(i, a)| a.conj() * v[i]).sum()
    }
}

/// ⟨a|b⟩ = Σ conj(a_i) b_i over shared indices.
pub fn inner(a: &SparseState, b: &SparseState) -> Result<C64> {
    if a.dim != b.dim {
        return Err(LinalgError::DimensionMismatch(a.dim, b.dim));
    }
    let mut acc = C64::new(0.0, 0.0);
    let (mut i, mut j) = (0, 0);
    while i < a.terms.len() && j < b.terms.len() {
        let (ia, xa) = a.terms[i];
        let (ib, xb) = b.terms[j];
        match ia.cmp(&ib) {
            std::cmp::Ordering::Equal => {
                acc += xa.conj() * xb;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    Ok(acc)
}

/// Sparse vectors indexed by the basis positions they touch.
struct SupportIndex {
    vecs: Vec<SparseState>,
    by_position: Vec<Vec<u32>>,
}

impl SupportIndex {
    fn new(dim: usize) -> Self {
        Self { vecs: Vec::new(), by_position: vec![Vec::new(); dim] }
    }

    fn push(&mut self, v: SparseState) {
        let id = self.vecs.len() as u32;
        for &(i, _) in v.terms() {
            self.by_position[i].push(id);
        }
        self.vecs.push(v);
    }

    /// Ids of stored vectors whose support meets `positions`, deduplicated via `stamp`.
    fn touching(&self, positions: &[usize], stamp: &mut [u32], round: u32) -> Vec<u32> {
        let mut ids = Vec::new();
        for &p in positions {
            for &id in &self.by_position[p] {
                if stamp[id as usize] != round {
                    stamp[id as usize] = round;
                    ids.push(id);
                }
            }
        }
        ids.sort_unstable();
        ids
    }
}

/// Largest deviation of the Gram matrix of `vectors` from the identity.
pub fn orthonormality_defect(vectors: &[SparseState]) -> Result<f64> {
    let Some(first) = vectors.first() else {
        return Ok(0.0);
    };
    let dim = first.dim();
    if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
        return Err(LinalgError::DimensionMismatch(dim, bad.dim()));
    }
    let mut index = SupportIndex::new(dim);
    for v in vectors {
        index.push(v.clone());
    }
    let mut stamp = vec![u32::MAX; vectors.len()];
    let mut scratch = vec![C64::new(0.0, 0.0); dim];
    let mut worst: f64 = 0.0;
    for (a, va) in vectors.iter().enumerate() {
        for &(i, x) in va.terms() {
            scratch[i] = x;
        }
        let positions: Vec<usize> = va.terms().iter().map(|t| t.0).collect();
        let ids = index.touching(&positions, &mut stamp, a as u32);
        for id in ids {
            let b = id as usize;
            if b < a {
                continue;
            }
            let dot: C64 = index.vecs[b].terms().iter().map(|&(i, y)| scratch[i].conj() * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
        if va.is_empty() {
            worst = worst.max(1.0);
        }
        for &(i, _) in va.terms() {
            scratch[i] = C64::new(0.0, 0.0);
        }
    }
    Ok(worst)
}

/// Completes an orthonormal family to an orthonormal basis of the `dim`-dimensional space.
///
/// Candidates are the computational basis vectors in index order; each is
/// projected against everything accepted so far (two classical Gram–Schmidt
/// passes) and kept when the residual norm reaches [`COMPLETION_SKIP_TOL`].
pub fn gram_schmidt_complete(given: &[SparseState], dim: usize, tol: f64) -> Result<Vec<SparseState>> {
    if let Some(bad) = given.iter().find(|v| v.dim() != dim) {
        return Err(LinalgError::DimensionMismatch(dim, bad.dim()));
    }
    let defect = orthonormality_defect(given)?;
    if defect > tol {
        return Err(LinalgError::NotOrthonormal(defect));
    }
    let expected = dim.saturating_sub(given.len());
    let mut index = SupportIndex::new(dim);
    for v in given {
        index.push(v.clone());
    }
    let mut added = Vec::with_capacity(expected);
    let mut scratch = vec![C64::new(0.0, 0.0); dim];
    let mut touched_flag = vec![false; dim];
    let mut stamp: Vec<u32> = Vec::new();
    let mut round = 0u32;

    for candidate in 0..dim {
        if added.len() == expected {
            break;
        }
        let mut touched = vec![candidate];
        touched_flag[candidate] = true;
        scratch[candidate] = C64::new(1.0, 0.0);
        for _pass in 0..2 {
            stamp.resize(index.vecs.len(), u32::MAX);
            round = round.wrapping_add(1);
            let ids = index.touching(&touched, &mut stamp, round);
            let coeffs: Vec<(u32, C64)> = ids
                .iter()
                .map(|&id| {
                    let c: C64 = index.vecs[id as usize].terms().iter().map(|&(i, q)| q.conj() * scratch[i]).sum();
                    (id, c)
                })
                .collect();
            for (id, c) in coeffs {
                if c.norm() == 0.0 {
                    continue;
                }
                for &(i, q) in index.vecs[id as usize].terms() {
                    scratch[i] -= c * q;
                    if !touched_flag[i] {
                        touched_flag[i] = true;
                        touched.push(i);
                    }
                }
            }
        }
        let norm = touched.iter().map(|&i| scratch[i].norm_sqr()).sum::<f64>().sqrt();
        if norm >= COMPLETION_SKIP_TOL {
            let inv = 1.0 / norm;
            let terms: Vec<(usize, C64)> =
                touched.iter().map(|&i| (i, scratch[i] * inv)).filter(|t| t.1.norm() >= PRUNE_TOL).collect();
            let v = SparseState::from_terms(dim, terms)?;
            index.push(v.clone());
            added.push(v);
        }
        for &i in &touched {
            scratch[i] = C64::new(0.0, 0.0);
            touched_flag[i] = false;
        }
    }
    if added.len() != expected {
        return Err(LinalgError::CompletionFailed { found: added.len(), expected });
    }
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn kron_of_basis_columns() {
        let e0 = DenseMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        let e1 = DenseMatrix::from_real(2, 1, &[0.0, 1.0]).unwrap();
        let k = tensor_product(&e0, &e1).unwrap();
        assert_eq!(k.rows(), 4);
        assert_eq!(k.get(1, 0), c(1.0));
        assert_eq!(k.data().iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn kron_dimension_limit() {
        let big = DenseMatrix::identity(MAX_DENSE_DIM);
        let two = DenseMatrix::identity(2);
        assert!(matches!(tensor_product(&big, &two), Err(LinalgError::DimensionLimit(_))));
    }

    #[test]
    fn sparse_inner_examples() {
        let e1 = SparseState::basis(4, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let plus = SparseState::from_terms(4, [(1, c(s)), (2, c(s))]).unwrap();
        assert!((inner(&e1, &plus).unwrap() - c(s)).norm() < 1e-15);
        let e3 = SparseState::basis(4, 3).unwrap();
        assert_eq!(inner(&e1, &e3).unwrap(), c(0.0));
        assert!(inner(&e1, &SparseState::zero(8)).is_err());
    }

    #[test]
    fn from_terms_merges_and_prunes() {
        let s = SparseState::from_terms(8, [(3, c(1.0)), (1, c(2.0)), (3, c(-1.0)), (5, c(1e-16))]).unwrap();
        assert_eq!(s.terms(), &[(1, c(2.0))]);
        assert!(SparseState::from_terms(4, [(4, c(1.0))]).is_err());
    }

    #[test]
    fn completion_small_cases() {
        let out = gram_schmidt_complete(&[], 2, 1e-12).unwrap();
        assert_eq!(out, vec![SparseState::basis(2, 0).unwrap(), SparseState::basis(2, 1).unwrap()]);
        let out = gram_schmidt_complete(&[SparseState::basis(2, 0).unwrap()], 2, 1e-12).unwrap();
        assert_eq!(out, vec![SparseState::basis(2, 1).unwrap()]);
        let bad = SparseState::from_terms(2, [(0, c(2.0))]).unwrap();
        assert!(matches!(gram_schmidt_complete(&[bad], 2, 1e-12), Err(LinalgError::NotOrthonormal(_))));
    }

    #[test]
    fn eig_pauli_x() {
        let x = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let (vals, vecs) = hermitian_eig(&x).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        assert!((vecs.get(0, 0).norm() - s).abs() < 1e-14);
        assert!((vecs.get(1, 0) / vecs.get(0, 0) - c(1.0)).norm() < 1e-14);
        assert!((vecs.get(1, 1) / vecs.get(0, 1) + c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = DenseMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(hermitian_eig(&m), Err(LinalgError::NotHermitian(_))));
    }

    #[test]
    fn inv_sqrt_examples() {
        let id = DenseMatrix::identity(3);
        assert!(inv_sqrt_psd(&id, 1e-12).unwrap().max_abs_diff(&id) < 1e-14);
        let d = DenseMatrix::from_real(2, 2, &[4.0, 0.0, 0.0, 0.0]).unwrap();
        let want = DenseMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.0]).unwrap();
        assert!(inv_sqrt_psd(&d, 1e-12).unwrap().max_abs_diff(&want) < 1e-14);
        let neg = DenseMatrix::from_real(2, 2, &[-1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(inv_sqrt_psd(&neg, 1e-12), Err(LinalgError::NotPositive(_))));
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7;
        let g = DenseMatrix::from_real(2, 2, &[0.0, -t, t, 0.0]).unwrap();
        let u = expm(&g).unwrap();
        let want = DenseMatrix::from_real(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]).unwrap();
        assert!(u.max_abs_diff(&want) < 1e-14);
        assert!(expm_error_bound(1.4) < 1e-12);
    }
}
