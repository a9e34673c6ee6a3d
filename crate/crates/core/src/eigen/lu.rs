use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Pivots below this fraction of `‖A‖∞` are treated as zero.
pub const SINGULAR_RTOL: f64 = 1e-13;

/// LU factorisation with partial pivoting, `PA = LU`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.require_square()?;
        let threshold = SINGULAR_RTOL * a.norm_inf();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[i * n + k].abs()))
                    .fold(
                        (k, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if !(pivot > threshold) || pivot == 0.0 {
                return Err(Error::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for order {n}",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular(k));
        }
        Ok(x)
    }

    /// Solve `AX = M` column by column.
    pub fn solve_matrix(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        if m.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} right-hand side for order {}",
                m.rows(),
                m.cols(),
                self.n
            )));
        }
        let mt = m.transpose();
        let mut cols = Vec::with_capacity(m.cols());
        for j in 0..m.cols() {
            cols.push(self.solve(mt.row(j))?);
        }
        Ok(DenseMatrix::from_rows(&cols)?.transpose())
    }

    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut det: f64 = (0..n).map(|i| self.lu[i * n + i]).product();
        // sign of the permutation from its cycle decomposition
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.perm[k];
                len += 1;
            }
            if len % 2 == 0 {
                det = -det;
            }
        }
        det
    }
}

/// Solve `Ax = b`.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve(b)
}

/// Solve `AX = M`, i.e. form `A⁻¹M` without the inverse.
pub fn solve_matrix(a: &DenseMatrix, m: &DenseMatrix) -> Result<DenseMatrix> {
    Lu::factor(a)?.solve_matrix(m)
}
