use crate::error::{Error, Result};
use crate::matrix::{row_normalize, DenseMatrix, StochasticMatrix};

/// Smallest off-diagonal row mass accepted before the kernel is considered
/// degenerate.
const MIN_OFF_DIAGONAL_MASS: f64 = 1e-300;

/// Gaussian affinity between pixel intensities, optionally windowed by a
/// Gaussian in pixel index distance.
pub fn kernel_matrix(signal: &[f64], h: f64, spatial_sigma: Option<f64>) -> Result<DenseMatrix> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("signal of length {n}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth {h}")));
    }
    if let Some(s) = spatial_sigma {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("spatial sigma {s}")));
        }
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite signal".into()));
    }
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = signal[i] - signal[j];
            let mut v = (-(d * d) / (2.0 * h * h)).exp();
            if let Some(s) = spatial_sigma {
                let di = i as f64 - j as f64;
                v *= (-(di * di) / (2.0 * s * s)).exp();
            }
            k[i * n + j] = v;
        }
    }
    DenseMatrix::new(n, n, k)
}

/// Row-normalised Gaussian kernel: `W = diag(Ke)⁻¹ K`.
///
/// `K` is symmetric, strictly positive and positive semidefinite, so `W` is
/// stochastic and primitive, though generally not symmetric.
pub fn kernel_denoiser(
    signal: &[f64],
    h: f64,
    spatial_sigma: Option<f64>,
) -> Result<StochasticMatrix> {
    let k = kernel_matrix(signal, h, spatial_sigma)?;
    let n = k.rows();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| k[(i, j)]).sum();
        if off < MIN_OFF_DIAGONAL_MASS {
            return Err(Error::DegenerateBandwidth(i));
        }
    }
    row_normalize(&k)
}
