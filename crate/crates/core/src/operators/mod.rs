//! The parametric operator families
//!
//! ```text
//! P(t) = W (I − tB)
//! R(t) = I − W + (I + tB)⁻¹ (2W − I)
//! ```
//!
//! built from a stochastic `W` and a matrix `B`, together with the imaging
//! models that produce `B` and the kernel denoisers that produce `W`.

mod denoiser;
mod forward;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use denoiser::{kernel_denoiser, kernel_matrix};
pub use forward::{
    build_deblur, build_inpainting, build_superres, gram, gram_matrix, ForwardOperator,
    OperatorKind, OperatorParams,
};

use crate::eigen::{self, SYMMETRY_RTOL};
use crate::error::{Error, Result};
use crate::matrix::{
    is_positive_semidefinite, left_perron_vector, structure, DenseMatrix, PerronData,
    StochasticMatrix, StructureReport,
};

/// Tolerance used when deciding the conjecture's hypotheses.
pub const HYPOTHESIS_TOL: f64 = 1e-10;

const PERRON_TOL: f64 = 1e-14;
const PERRON_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    P,
    R,
}

impl Which {
    pub const BOTH: [Which; 2] = [Which::P, Which::R];
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::P => "P",
            Which::R => "R",
        })
    }
}

impl FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Which::P),
            "R" | "r" => Ok(Which::R),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// A validated `(W, B)` pair with cached Perron data and `ρ(B)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorFamily {
    w: StochasticMatrix,
    b: DenseMatrix,
    perron: PerronData,
    rho_b: f64,
    structure: StructureReport,
    pub labels: Vec<String>,
}

pub fn make_family(w: StochasticMatrix, b: DenseMatrix) -> Result<OperatorFamily> {
    let n = w.n();
    if b.rows() != n || b.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "W is {n}x{n}, B is {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let structure = structure(&w);
    if !structure.irreducible {
        return Err(Error::NotIrreducible);
    }
    let perron = left_perron_vector(&w, PERRON_TOL, PERRON_MAX_ITER)?;
    let rho_b = spectral_radius_of_b(&b)?;
    Ok(OperatorFamily {
        w,
        b,
        perron,
        rho_b,
        structure,
        labels: Vec::new(),
    })
}

/// `ρ(B)` through the symmetric solver when `B` is symmetric.
pub fn spectral_radius_of_b(b: &DenseMatrix) -> Result<f64> {
    if b.max_asymmetry() <= SYMMETRY_RTOL * b.max_abs().max(1.0) {
        let v = eigen::symmetric_eigenvalues(b)?;
        Ok(v[0].abs().max(v[v.len() - 1].abs()))
    } else {
        Ok(eigen::spectral_radius(b)?.radius)
    }
}

impl OperatorFamily {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.labels.push(label.into());
        self
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    pub fn w(&self) -> &StochasticMatrix {
        &self.w
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn perron(&self) -> &PerronData {
        &self.perron
    }

    pub fn rho_b(&self) -> f64 {
        self.rho_b
    }

    pub fn structure(&self) -> &StructureReport {
        &self.structure
    }

    /// `2/ρ(B)`, the step-size bound of the stability results.
    pub fn step_bound(&self) -> f64 {
        2.0 / self.rho_b
    }

    /// `Be`.
    pub fn b_times_e(&self) -> Vec<f64> {
        self.b.row_sums()
    }

    /// `πᵀBe`.
    pub fn pi_b_e(&self) -> f64 {
        crate::matrix::dot(&self.perron.pi, &self.b_times_e())
    }

    /// `P(t) = W(I − tB)`.
    pub fn p_at(&self, t: f64) -> Result<DenseMatrix> {
        if !t.is_finite() {
            return Err(Error::InvalidParameter(format!("t = {t}")));
        }
        self.w.matrix().mul(&self.b.shifted(1.0, -t)?)
    }

    /// `R(t) = I − W + (I + tB)⁻¹(2W − I)`, via a right-solve with `I + tB`.
    pub fn r_at(&self, t: f64) -> Result<DenseMatrix> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("t = {t}")));
        }
        let w = self.w.matrix();
        let shift = self.b.shifted(1.0, t)?;
        let rhs = w.shifted(-1.0, 2.0)?;
        let x = eigen::solve_matrix(&shift, &rhs).map_err(|e| match e {
            Error::Singular(_) => Error::SingularShift(t),
            other => other,
        })?;
        w.shifted(1.0, -1.0)?.add(&x)
    }

    pub fn operator_at(&self, which: Which, t: f64) -> Result<DenseMatrix> {
        match which {
            Which::P => self.p_at(t),
            Which::R => self.r_at(t),
        }
    }

    /// `ρ(P(t))` or `ρ(R(t))`.
    pub fn rho(&self, which: Which, t: f64) -> Result<f64> {
        Ok(eigen::spectral_radius(&self.operator_at(which, t)?)?.radius)
    }

    /// `P′(0) = −WB`, `R′(0) = −B(2W − I)`.
    pub fn derivative_at_zero(&self, which: Which) -> Result<DenseMatrix> {
        let w = self.w.matrix();
        match which {
            Which::P => w.mul(&self.b)?.scaled(-1.0),
            Which::R => self.b.mul(&w.shifted(-1.0, 2.0)?)?.scaled(-1.0),
        }
    }

    /// First-order perturbation slope of the spectral radius at `t = 0`,
    /// `π ᵀ M′(0) e = −πᵀBe`, shared by both families.
    pub fn predicted_slope(&self) -> f64 {
        -self.pi_b_e()
    }
}

/// `B = αI + βE`, admitted when PSD with `Be ≠ 0`, i.e. `α ≥ 0` and `α + nβ > 0`.
pub fn alpha_beta_b(alpha: f64, beta: f64, n: usize) -> Result<DenseMatrix> {
    if n == 0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidParameter("alpha, beta or n".into()));
    }
    if alpha < 0.0 || alpha + n as f64 * beta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha}, beta = {beta} (need alpha >= 0 and alpha + n*beta > 0)"
        )));
    }
    DenseMatrix::ones_matrix(n).shifted(alpha, beta)
}

/// The hypotheses of the step-size conjecture, each decided with
/// [`HYPOTHESIS_TOL`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureHypotheses {
    #[serde(rename = "primitive_W")]
    pub primitive_w: bool,
    #[serde(rename = "psd_B")]
    pub psd_b: bool,
    #[serde(rename = "Be_le_rhoB_e")]
    pub be_le_rho_b_e: bool,
    #[serde(rename = "piTBe_positive")]
    pub pi_b_e_positive: bool,
    #[serde(rename = "piTBe")]
    pub pi_b_e: f64,
    /// `min_i ρ(B) − (Be)_i`.
    pub margin: f64,
}

impl ConjectureHypotheses {
    pub fn all_hold(&self) -> bool {
        self.primitive_w && self.psd_b && self.be_le_rho_b_e && self.pi_b_e_positive
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.primitive_w {
            out.push("W not primitive");
        }
        if !self.psd_b {
            out.push("B not positive semidefinite");
        }
        if !self.be_le_rho_b_e {
            out.push("Be not <= rho(B) e");
        }
        if !self.pi_b_e_positive {
            out.push("pi^T B e not positive");
        }
        out
    }
}

pub fn conjecture_hypotheses(family: &OperatorFamily) -> ConjectureHypotheses {
    let be = family.b_times_e();
    let rho = family.rho_b();
    let margin = be.iter().map(|v| rho - v).fold(f64::INFINITY, f64::min);
    let pi_b_e = family.pi_b_e();
    ConjectureHypotheses {
        primitive_w: family.structure().primitive,
        psd_b: is_positive_semidefinite(family.b(), HYPOTHESIS_TOL).unwrap_or(false),
        be_le_rho_b_e: margin >= -HYPOTHESIS_TOL,
        pi_b_e_positive: pi_b_e > HYPOTHESIS_TOL,
        pi_b_e,
        margin,
    }
}
