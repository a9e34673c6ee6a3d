//! Imaging forward operators `A` and their Gram matrices `B = AᵀA`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Inpainting,
    Deblurring,
    Superresolution,
    Custom,
}

/// Constructor metadata, enough to rebuild the operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorParams {
    Inpainting {
        mask: Vec<u8>,
    },
    Deblurring {
        kernel: Vec<f64>,
        n: usize,
    },
    Superresolution {
        kernel: Vec<f64>,
        n: usize,
        stride: usize,
    },
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForwardOperator {
    a: DenseMatrix,
    kind: OperatorKind,
    params: OperatorParams,
}

impl ForwardOperator {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn params(&self) -> &OperatorParams {
        &self.params
    }

    /// Number of unknowns (columns of `A`).
    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// Number of measurements (rows of `A`).
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    /// Wrap an arbitrary nonzero matrix.
    pub fn custom(a: DenseMatrix) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidParameter("forward operator is zero".into()));
        }
        Ok(Self {
            a,
            kind: OperatorKind::Custom,
            params: OperatorParams::Custom,
        })
    }
}

/// Inpainting: `A = diag(mask)` with a 0/1 mask.
pub fn build_inpainting(mask: &[u8]) -> Result<ForwardOperator> {
    if mask.is_empty() {
        return Err(Error::AllZeroMask);
    }
    if let Some(&bad) = mask.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidParameter(format!("mask entry {bad}")));
    }
    if mask.iter().all(|&v| v == 0) {
        return Err(Error::AllZeroMask);
    }
    let d: Vec<f64> = mask.iter().map(|&v| f64::from(v)).collect();
    Ok(ForwardOperator {
        a: DenseMatrix::diag(&d),
        kind: OperatorKind::Inpainting,
        params: OperatorParams::Inpainting {
            mask: mask.to_vec(),
        },
    })
}

/// Periodic blur: circulant `H` whose first row is `kernel / Σ kernel`,
/// zero-padded to length `n`; row `i` is that row shifted right by `i`.
pub fn build_deblur(kernel: &[f64], n: usize) -> Result<ForwardOperator> {
    if kernel.is_empty() || kernel.len() > n {
        return Err(Error::InvalidParameter(format!(
            "kernel of length {} for n = {n}",
            kernel.len()
        )));
    }
    if kernel.iter().any(|&k| !(k >= 0.0) || !k.is_finite()) {
        return Err(Error::ZeroKernel);
    }
    let mass: f64 = kernel.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::ZeroKernel);
    }
    let mut first = vec![0.0; n];
    for (f, &k) in first.iter_mut().zip(kernel) {
        *f = k / mass;
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = first[(j + n - i) % n];
        }
    }
    Ok(ForwardOperator {
        a: DenseMatrix::new(n, n, data)?,
        kind: OperatorKind::Deblurring,
        params: OperatorParams::Deblurring {
            kernel: kernel.to_vec(),
            n,
        },
    })
}

/// Superresolution `A = SH`, where `S` keeps rows `0, stride, 2·stride, …`.
pub fn build_superres(h: &ForwardOperator, stride: usize) -> Result<ForwardOperator> {
    let OperatorParams::Deblurring { kernel, n } = h.params() else {
        return Err(Error::InvalidParameter(
            "superresolution needs a deblurring operator".into(),
        ));
    };
    if stride == 0 {
        return Err(Error::EmptySelection);
    }
    let rows: Vec<&[f64]> = (0..h.m()).step_by(stride).map(|i| h.a.row(i)).collect();
    if rows.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(ForwardOperator {
        a: DenseMatrix::from_rows(&rows)?,
        kind: OperatorKind::Superresolution,
        params: OperatorParams::Superresolution {
            kernel: kernel.clone(),
            n: *n,
            stride,
        },
    })
}

/// `B = AᵀA`, exactly symmetric.
pub fn gram(op: &ForwardOperator) -> DenseMatrix {
    gram_matrix(op.matrix())
}

pub fn gram_matrix(a: &DenseMatrix) -> DenseMatrix {
    let n = a.cols();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..a.rows()).map(|k| a[(k, i)] * a[(k, j)]).sum();
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    DenseMatrix::new(n, n, data).expect("finite Gram matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::is_positive_semidefinite;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inpainting() {
        let op = build_inpainting(&[1, 0, 1]).unwrap();
        assert_eq!(op.matrix(), &DenseMatrix::diag(&[1.0, 0.0, 1.0]));
        assert_eq!(gram(&op), *op.matrix());
        assert_eq!(
            build_inpainting(&[1, 1]).unwrap().matrix(),
            &DenseMatrix::identity(2)
        );
        assert_eq!(build_inpainting(&[0, 0]).unwrap_err(), Error::AllZeroMask);
        assert!(build_inpainting(&[2]).is_err());
    }

    #[test]
    fn deblur() {
        let h = build_deblur(&[0.913, 0.087], 2).unwrap();
        assert_eq!(
            h.matrix().to_rows(),
            vec![vec![0.913, 0.087], vec![0.087, 0.913]]
        );
        assert_eq!(
            build_deblur(&[1.0], 4).unwrap().matrix(),
            &DenseMatrix::identity(4)
        );

        let h = build_deblur(&[2.0, 1.0, 1.0], 5).unwrap();
        let a = h.matrix();
        for s in a.row_sums().into_iter().chain(a.col_sums()) {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-15);
        }
        assert_eq!(a.row(0), &[0.5, 0.25, 0.25, 0.0, 0.0]);
        assert_eq!(a.row(1), &[0.0, 0.5, 0.25, 0.25, 0.0]);
        assert_eq!(a.row(4), &[0.25, 0.25, 0.0, 0.0, 0.5]);

        assert_eq!(build_deblur(&[0.0, 0.0], 3).unwrap_err(), Error::ZeroKernel);
        assert!(build_deblur(&[1.0, 1.0, 1.0], 2).is_err());
    }

    #[test]
    fn superres_of_two_pixel_blur() {
        let h = build_deblur(&[0.48, 0.52], 2).unwrap();
        let sh = build_superres(&h, 2).unwrap();
        assert_eq!(sh.matrix().to_rows(), vec![vec![0.48, 0.52]]);
        let b = gram(&sh);
        let want = [[0.2304, 0.2496], [0.2496, 0.2704]];
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(b[(i, j)], want[i][j], epsilon = 1e-15);
            }
        }
        assert_eq!(build_superres(&h, 1).unwrap().matrix(), h.matrix());
        assert_eq!(build_superres(&h, 0).unwrap_err(), Error::EmptySelection);
        assert!(build_superres(&build_inpainting(&[1, 1]).unwrap(), 2).is_err());
    }

    #[test]
    fn gram_is_symmetric_psd() {
        let op = build_superres(&build_deblur(&[3.0, 1.0, 0.5], 7).unwrap(), 3).unwrap();
        let b = gram(&op);
        assert_eq!(b.max_asymmetry(), 0.0);
        assert!(is_positive_semidefinite(&b, 1e-12).unwrap());
    }

    #[test]
    fn params_serialize() {
        let op = build_superres(&build_deblur(&[1.0, 1.0], 4).unwrap(), 2).unwrap();
        let v = serde_json::to_value(op.params()).unwrap();
        assert_eq!(v["superresolution"]["stride"], 2);
        assert_eq!(serde_json::to_value(op.kind()).unwrap(), "superresolution");
    }
}
