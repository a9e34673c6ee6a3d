//! Dense eigensolvers, spectral radius and norm, and LU solves.
//!
//! Complex arithmetic is confined to this module: every public matrix is
//! real, spectra are returned as [`Complex64`].

mod lu;
mod nonsymmetric;
mod symmetric;

pub use lu::{solve_linear, solve_matrix, Lu, SINGULAR_RTOL};
pub use nonsymmetric::SWEEPS_PER_ORDER;
pub use num_complex::Complex64;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Relative asymmetry accepted by [`symmetric_eigenvalues`].
pub const SYMMETRY_RTOL: f64 = 1e-9;

/// Eigenvalue multiset of a real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    /// Backward-error scale `n·ε·‖M‖_F`, a diagnostic.
    pub residual_bound: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Values sorted by descending modulus, then descending real part.
    pub fn sorted_by_modulus(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| {
            b.norm()
                .total_cmp(&a.norm())
                .then(b.re.total_cmp(&a.re))
                .then(b.im.total_cmp(&a.im))
        });
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub radius: f64,
    pub dominant: (f64, f64),
    /// Radius minus the second-largest modulus (counted with multiplicity).
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EigenOptions {
    pub balance: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { balance: true }
    }
}

pub fn eigenvalues(m: &DenseMatrix) -> Result<Spectrum> {
    eigenvalues_with(m, EigenOptions::default())
}

pub fn eigenvalues_with(m: &DenseMatrix, opts: EigenOptions) -> Result<Spectrum> {
    let n = m.require_square()?;
    let mut a = m.as_slice().to_vec();
    if opts.balance {
        nonsymmetric::balance(&mut a, n);
    }
    nonsymmetric::hessenberg(&mut a, n);
    let values = nonsymmetric::hqr(&mut a, n)?;
    let fro = m.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(Spectrum {
        values,
        residual_bound: n as f64 * f64::EPSILON * fro,
    })
}

pub fn spectral_radius(m: &DenseMatrix) -> Result<SpectralSummary> {
    Ok(summarize(&eigenvalues(m)?))
}

pub fn summarize(spectrum: &Spectrum) -> SpectralSummary {
    let radius = spectrum.radius();
    let tie = radius * (1.0 - 4.0 * f64::EPSILON);
    let dominant = spectrum
        .values
        .iter()
        .filter(|z| z.norm() >= tie)
        .max_by(|a, b| {
            a.re.total_cmp(&b.re)
                .then((a.im >= 0.0).cmp(&(b.im >= 0.0)))
        })
        .copied()
        .unwrap_or_default();
    let sorted = spectrum.sorted_by_modulus();
    let second = sorted.get(1).map_or(0.0, |z| z.norm());
    SpectralSummary {
        radius,
        dominant: (dominant.re, dominant.im),
        gap: radius - second,
    }
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    let n = s.require_square()?;
    let asym = s.max_asymmetry();
    if asym > SYMMETRY_RTOL * s.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = s.symmetrized()?.as_slice().to_vec();
    symmetric::symmetric_eigen(&mut a, n)
}

fn gram_of(m: &DenseMatrix) -> DenseMatrix {
    let (r, c) = (m.rows(), m.cols());
    let mut g = DenseMatrix::zeros(c, c);
    let out = g.as_mut_slice();
    for i in 0..c {
        for j in i..c {
            let v: f64 = (0..r).map(|k| m[(k, i)] * m[(k, j)]).sum();
            out[i * c + j] = v;
            out[j * c + i] = v;
        }
    }
    g
}

/// Largest singular value, `√λ_max(MᵀM)`.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    let g = if m.cols() <= m.rows() {
        gram_of(m)
    } else {
        gram_of(&m.transpose())
    };
    let mut a = g.as_slice().to_vec();
    let n = g.rows();
    let values = symmetric::symmetric_eigen(&mut a, n).expect("Gram matrices are symmetric");
    values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `‖C⁻¹‖₂` for the complex matrix `C = re + i·im`, via the real embedding
/// `[[re, −im], [im, re]]`, whose singular values are those of `C`, doubled.
pub fn complex_inverse_norm(re: &DenseMatrix, im: &DenseMatrix) -> Result<f64> {
    let n = re.require_square()?;
    if im.rows() != n || im.cols() != n {
        return Err(Error::DimensionMismatch(
            "real and imaginary parts differ".into(),
        ));
    }
    let mut e = vec![0.0; 4 * n * n];
    let w = 2 * n;
    for i in 0..n {
        for j in 0..n {
            e[i * w + j] = re[(i, j)];
            e[i * w + n + j] = -im[(i, j)];
            e[(n + i) * w + j] = im[(i, j)];
            e[(n + i) * w + n + j] = re[(i, j)];
        }
    }
    let embedded = DenseMatrix::new(w, w, e)?;
    let mut g = gram_of(&embedded).as_slice().to_vec();
    let values = symmetric::symmetric_eigen(&mut g, w)?;
    let sigma_min = values[0].max(0.0).sqrt();
    if sigma_min <= SINGULAR_RTOL * spectral_norm(&embedded) {
        return Err(Error::Singular(0));
    }
    Ok(1.0 / sigma_min)
}
