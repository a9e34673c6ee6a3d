//! Dense real matrices and the structural classes the stability results
//! are stated for: stochastic, doubly stochastic, irreducible, primitive,
//! positive semidefinite. Also computes the left Perron vector.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::{Error, Result};

/// Admission tolerance for stochasticity used when callers have no better idea.
pub const DEFAULT_STOCHASTIC_TOL: f64 = 1e-10;

/// Row-major dense real matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for DenseMatrix {
    type Error = Error;
    fn try_from(r: MatrixRepr) -> Result<Self> {
        DenseMatrix::new(r.rows, r.cols, r.data)
    }
}

impl From<DenseMatrix> for MatrixRepr {
    fn from(m: DenseMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "empty matrix {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self { rows, cols, data }.checked()
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != c {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {c}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in d.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// The all-ones matrix `E`.
    pub fn ones_matrix(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            data: vec![1.0; n * n],
        }
    }

    /// The all-ones column vector `e`.
    pub fn ones_vector(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    pub fn column(v: &[f64]) -> Result<Self> {
        Self::new(v.len(), 1, v.to_vec())
    }

    fn checked(self) -> Result<Self> {
        if let Some(k) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(k / self.cols, k % self.cols));
        }
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn mul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out.checked()
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `vᵀ M` as a vector.
    pub fn vecmat(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.rows != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} times {}x{}",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += vi * m;
            }
        }
        Ok(out)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
        .checked()
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
        .checked()
    }

    /// `I·a + self·s` for square matrices.
    pub fn shifted(&self, a: f64, s: f64) -> Result<Self> {
        let n = self.require_square()?;
        let mut out = self.scaled(s)?;
        for i in 0..n {
            out.data[i * n + i] += a;
        }
        out.checked()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (acc, &v) in s.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        s
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest `|M_ij − M_ji|`; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    /// Symmetric part `(M + Mᵀ)/2`.
    pub fn symmetrized(&self) -> Result<Self> {
        self.require_square()?;
        self.add(&self.transpose())?.scaled(0.5)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn diff_norm2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A square nonnegative matrix whose rows sum to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StochasticMatrix {
    inner: DenseMatrix,
    tol: f64,
}

impl StochasticMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.inner
    }

    pub fn n(&self) -> usize {
        self.inner.rows
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

impl AsRef<DenseMatrix> for StochasticMatrix {
    fn as_ref(&self) -> &DenseMatrix {
        &self.inner
    }
}

/// Admit `m` as a stochastic matrix.
///
/// Entries in `[-tol, 0)` are clamped to zero and every row is rescaled to
/// sum to one, so `We = e` holds to rounding afterwards.
pub fn validate_stochastic(m: &DenseMatrix, tol: f64) -> Result<StochasticMatrix> {
    let n = m.require_square()?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let mut data = m.as_slice().to_vec();
    for i in 0..n {
        for j in 0..n {
            let v = &mut data[i * n + j];
            if *v < -tol {
                return Err(Error::NegativeEntry(i, j));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    for i in 0..n {
        let row = &mut data[i * n..(i + 1) * n];
        // judged on the original row, before clamping
        let sum: f64 = m.row(i).iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::RowSumViolation(i, sum));
        }
        let clamped: f64 = row.iter().sum();
        if clamped != 1.0 {
            if clamped <= 0.0 {
                return Err(Error::RowSumViolation(i, sum));
            }
            row.iter_mut().for_each(|v| *v /= clamped);
        }
    }
    Ok(StochasticMatrix {
        inner: DenseMatrix::new(n, n, data)?,
        tol,
    })
}

/// Row-normalise a nonnegative matrix with positive row sums.
pub fn row_normalize(m: &DenseMatrix) -> Result<StochasticMatrix> {
    let n = m.require_square()?;
    let mut data = m.as_slice().to_vec();
    for i in 0..n {
        let row = &mut data[i * n..(i + 1) * n];
        if let Some(j) = row.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeEntry(i, j));
        }
        let s: f64 = row.iter().sum();
        if !(s > 0.0) {
            return Err(Error::RowSumViolation(i, s));
        }
        row.iter_mut().for_each(|v| *v /= s);
    }
    validate_stochastic(&DenseMatrix::new(n, n, data)?, 1e-12)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    pub irreducible: bool,
    pub primitive: bool,
    pub doubly_stochastic: bool,
    pub symmetric: bool,
    /// Only decided for symmetric input.
    pub psd: Option<bool>,
}

/// Nonzero pattern of a square matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    n: usize,
    bits: Vec<bool>,
}

impl Pattern {
    pub fn of(m: &DenseMatrix) -> Self {
        assert!(m.is_square());
        Self {
            n: m.rows(),
            bits: m.as_slice().iter().map(|&v| v != 0.0).collect(),
        }
    }

    pub fn from_bits(n: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), n * n);
        Self { n, bits }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn boolean_product(&self, other: &Pattern) -> Pattern {
        let n = self.n;
        let mut bits = vec![false; n * n];
        for i in 0..n {
            for k in 0..n {
                if !self.get(i, k) {
                    continue;
                }
                for j in 0..n {
                    bits[i * n + j] |= other.get(k, j);
                }
            }
        }
        Pattern { n, bits }
    }

    pub fn all_positive(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    fn reach_all(&self, from: usize, transposed: bool) -> bool {
        let n = self.n;
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let edge = if transposed {
                    self.get(v, u)
                } else {
                    self.get(u, v)
                };
                if edge && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Strong connectivity of the directed graph `i → j` iff `M_ij ≠ 0`.
    pub fn is_irreducible(&self) -> bool {
        self.reach_all(0, false) && self.reach_all(0, true)
    }

    /// Some power is entrywise positive. Uses repeated squaring past the
    /// Wielandt bound `(n-1)^2 + 1`: once a primitive pattern's power is
    /// positive, all higher powers are too.
    pub fn is_primitive(&self) -> bool {
        if !self.is_irreducible() {
            return false;
        }
        let bound = (self.n - 1) * (self.n - 1) + 1;
        let mut power = self.clone();
        let mut exponent = 1;
        while exponent < bound {
            power = power.boolean_product(&power);
            exponent *= 2;
        }
        power.all_positive()
    }
}

pub fn structure(w: &StochasticMatrix) -> StructureReport {
    let m = w.matrix();
    let n = w.n();
    let pattern = Pattern::of(m);
    let irreducible = pattern.is_irreducible();
    let primitive = irreducible && pattern.is_primitive();
    let tol = w.tol.max(64.0 * f64::EPSILON * n as f64);
    let doubly_stochastic = m.col_sums().iter().all(|s| (s - 1.0).abs() <= tol);
    let symmetric = m.max_asymmetry() <= tol;
    let psd = symmetric.then(|| is_positive_semidefinite(m, tol).unwrap_or(false));
    StructureReport {
        irreducible,
        primitive,
        doubly_stochastic,
        symmetric,
        psd,
    }
}

/// Left Perron vector `π` of an irreducible stochastic matrix, `πᵀe = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerronData {
    pub pi: Vec<f64>,
    /// `‖πᵀW − πᵀ‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

fn perron_residual(w: &DenseMatrix, pi: &[f64]) -> f64 {
    let pw = w.vecmat(pi).expect("square");
    pw.iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Power iteration on `Wᵀ` with L1 renormalisation. Periodic (irreducible,
/// not primitive) matrices are iterated through the lazy chain `(W + I)/2`,
/// which has the same left eigenvector. If the iteration stalls the vector
/// is obtained from the bordered system `(Wᵀ − I)π = 0, eᵀπ = 1` instead.
pub fn left_perron_vector(w: &StochasticMatrix, tol: f64, max_iter: usize) -> Result<PerronData> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let report = structure(w);
    if !report.irreducible {
        return Err(Error::NotIrreducible);
    }
    let n = w.n();
    let m = w.matrix();
    let lazy = !report.primitive;
    let mut pi = vec![1.0 / n as f64; n];
    let mut residual = perron_residual(m, &pi);
    let mut iterations = 0;
    while residual > tol && iterations < max_iter {
        let mut next = m.vecmat(&pi)?;
        if lazy {
            next.iter_mut()
                .zip(&pi)
                .for_each(|(a, b)| *a = 0.5 * (*a + b));
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= s);
        pi = next;
        iterations += 1;
        residual = perron_residual(m, &pi);
    }
    if residual > tol || pi.iter().any(|&p| p <= 0.0) {
        let direct = perron_direct(m)?;
        let r = perron_residual(m, &direct);
        if r < residual || pi.iter().any(|&p| p <= 0.0) {
            pi = direct;
            residual = r;
        }
    }
    if residual > tol || pi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(PerronData {
        pi,
        residual,
        iterations,
    })
}

fn perron_direct(w: &DenseMatrix) -> Result<Vec<f64>> {
    let n = w.rows();
    // Wᵀ − I with its last row replaced by eᵀ
    let mut a = w.transpose().shifted(-1.0, 1.0)?;
    for j in 0..n {
        a.as_mut_slice()[(n - 1) * n + j] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut pi = eigen::solve_linear(&a, &rhs)?;
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    Ok(pi)
}

/// True iff the symmetric part of `b` has minimum eigenvalue `≥ −tol`.
pub fn is_positive_semidefinite(b: &DenseMatrix, tol: f64) -> Result<bool> {
    b.require_square()?;
    let asym = b.max_asymmetry();
    if asym > tol {
        return Err(Error::NotSymmetric(asym));
    }
    let values = eigen::symmetric_eigenvalues(&b.symmetrized()?)?;
    Ok(values[0] >= -tol)
}
