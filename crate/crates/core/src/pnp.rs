//! Plug-and-play fixed-point iterations and empirical convergence rates.
//!
//! The proximal-gradient form with a linear denoiser `W` is the affine map
//! `x ← W(x − t(AᵀAx − Aᵀb)) = P(t)x + tWAᵀb`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::solve_linear;
use crate::error::{Error, Result};
use crate::generate::{rng_for, uniform_vector};
use crate::io::fmt_sig;
use crate::matrix::{diff_norm2, norm2, DenseMatrix, StochasticMatrix};
use crate::operators::{
    build_deblur, build_inpainting, build_superres, gram, kernel_denoiser, ForwardOperator,
    OperatorKind,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InverseProblem {
    a: ForwardOperator,
    b: Vec<f64>,
    w: StochasticMatrix,
    t: f64,
}

impl InverseProblem {
    pub fn new(a: ForwardOperator, b: Vec<f64>, w: StochasticMatrix, t: f64) -> Result<Self> {
        if a.n() != w.n() || b.len() != a.m() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, b has length {}, W is {}x{}",
                a.m(),
                a.n(),
                b.len(),
                w.n(),
                w.n()
            )));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("step t = {t}")));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite observation".into()));
        }
        Ok(InverseProblem { a, b, w, t })
    }

    pub fn a(&self) -> &ForwardOperator {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn w(&self) -> &StochasticMatrix {
        &self.w
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    /// `P(t) = W(I − tAᵀA)`.
    pub fn iteration_matrix(&self) -> Result<DenseMatrix> {
        self.w.matrix().mul(&gram(&self.a).shifted(1.0, -self.t)?)
    }

    /// `tWAᵀb`.
    pub fn offset(&self) -> Result<Vec<f64>> {
        let atb = self.a.matrix().vecmat(&self.b)?;
        Ok(self
            .w
            .matrix()
            .matvec(&atb)?
            .into_iter()
            .map(|v| self.t * v)
            .collect())
    }

    /// `J(x) = ½‖Ax − b‖²`.
    pub fn loss(&self, x: &[f64]) -> Result<f64> {
        let ax = self.a.matrix().matvec(x)?;
        let r = diff_norm2(&ax, &self.b);
        Ok(0.5 * r * r)
    }
}

/// Solves `(I − P(t))x = tWAᵀb`.
pub fn fixed_point(problem: &InverseProblem) -> Result<Vec<f64>> {
    affine_fixed_point(&problem.iteration_matrix()?, &problem.offset()?)
}

fn affine_fixed_point(m: &DenseMatrix, c: &[f64]) -> Result<Vec<f64>> {
    solve_linear(&m.shifted(-1.0, 1.0)?.scaled(-1.0)?, c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// Number of iterates recorded, `x⁽⁰⁾` included.
    pub iterates_kept: usize,
    pub iterations: usize,
    /// `‖x⁽ᵏ⁾ − x*‖₂`; empty when the fixed point does not exist.
    pub error_norms: Vec<f64>,
    /// `‖x⁽ᵏ⁺¹⁾ − x⁽ᵏ⁾‖₂`.
    pub step_norms: Vec<f64>,
    /// `½‖Ax⁽ᵏ⁾ − b‖²`; empty for bare affine iterations.
    pub loss_values: Vec<f64>,
    pub estimated_rate: Option<f64>,
    pub converged: bool,
    pub final_x: Vec<f64>,
}

impl IterationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,error_norm,loss\n");
        let cell = |v: Option<&f64>| v.map(|x| fmt_sig(*x, 12)).unwrap_or_default();
        for k in 0..self.iterates_kept {
            out.push_str(&format!(
                "{k},{},{}\n",
                cell(self.error_norms.get(k)),
                cell(self.loss_values.get(k))
            ));
        }
        out
    }
}

fn check_lengths(m: &DenseMatrix, c: &[f64], x0: &[f64]) -> Result<usize> {
    let n = m.require_square()?;
    if c.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "M is {n}x{n}, c has length {}, x0 has length {}",
            c.len(),
            x0.len()
        )));
    }
    Ok(n)
}

fn iterate(
    m: &DenseMatrix,
    c: &[f64],
    x0: &[f64],
    max_iter: usize,
    tol: f64,
    x_star: Option<&[f64]>,
    loss: Option<&dyn Fn(&[f64]) -> Result<f64>>,
) -> Result<IterationTrace> {
    let mut x = x0.to_vec();
    let mut error_norms = Vec::new();
    let mut step_norms = Vec::new();
    let mut loss_values = Vec::new();
    let mut record = |x: &[f64]| -> Result<()> {
        if let Some(xs) = x_star {
            error_norms.push(diff_norm2(x, xs));
        }
        if let Some(f) = loss {
            loss_values.push(f(x)?);
        }
        Ok(())
    };
    record(&x)?;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let mut next = m.matvec(&x)?;
        next.iter_mut().zip(c).for_each(|(v, ci)| *v += ci);
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        let step = diff_norm2(&next, &x);
        let scale = 1.0 + norm2(&x);
        step_norms.push(step);
        x = next;
        iterations += 1;
        record(&x)?;
        if step <= tol * scale {
            converged = true;
            break;
        }
    }
    let mut trace = IterationTrace {
        iterates_kept: iterations + 1,
        iterations,
        error_norms,
        step_norms,
        loss_values,
        estimated_rate: None,
        converged,
        final_x: x,
    };
    trace.estimated_rate = empirical_rate(&trace).ok();
    Ok(trace)
}

/// Runs the proximal-gradient PnP iteration from `x0`. Stops when
/// `‖x⁽ᵏ⁺¹⁾ − x⁽ᵏ⁾‖₂ ≤ tol (1 + ‖x⁽ᵏ⁾‖₂)` or after `max_iter` steps.
pub fn pgd_pnp_run(
    problem: &InverseProblem,
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<IterationTrace> {
    let m = problem.iteration_matrix()?;
    let c = problem.offset()?;
    check_lengths(&m, &c, x0)?;
    let x_star = fixed_point(problem).ok();
    let loss = |x: &[f64]| problem.loss(x);
    iterate(&m, &c, x0, max_iter, tol, x_star.as_deref(), Some(&loss))
}

/// `x ← Mx + c` with the same stopping rule as [`pgd_pnp_run`].
pub fn affine_iterate(
    m: &DenseMatrix,
    c: &[f64],
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<IterationTrace> {
    check_lengths(m, c, x0)?;
    let x_star = affine_fixed_point(m, c).ok();
    iterate(m, c, x0, max_iter, tol, x_star.as_deref(), None)
}

const MIN_RATE_SAMPLES: usize = 20;

/// Geometric mean of successive error ratios over the last quartile of the
/// error sequence. Errors at the rounding floor (`≤ 100 ε` relative to the
/// initial error) are discarded first.
pub fn empirical_rate(trace: &IterationTrace) -> Result<f64> {
    let e = &trace.error_norms;
    let first = *e
        .first()
        .ok_or_else(|| Error::InsufficientData("no error norms".into()))?;
    let floor = 1e2 * f64::EPSILON * first.max(norm2(&trace.final_x));
    let usable = e.iter().position(|&v| v <= floor).unwrap_or(e.len());
    if usable < MIN_RATE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{usable} error norms above the rounding floor, need {MIN_RATE_SAMPLES}"
        )));
    }
    let q = (usable / 4).max(1);
    let (start, end) = (e[usable - 1 - q], e[usable - 1]);
    Ok((end / start).powf(1.0 / q as f64))
}

/// Seeded test problem: a random signal observed through `kind`,
/// denoised by a kernel denoiser built from a noisy copy of the signal.
pub fn random_problem(
    kind: OperatorKind,
    n: usize,
    t: f64,
    seed: u64,
) -> Result<(InverseProblem, Vec<f64>)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
    }
    let mut rng = rng_for(seed);
    let x_true = uniform_vector(n, 0.0, 1.0, &mut rng);
    let guide: Vec<f64> = x_true
        .iter()
        .map(|v| v + rng.gen_range(-0.05..0.05))
        .collect();
    let w = kernel_denoiser(
        &guide,
        rng.gen_range(0.2..0.6),
        Some(rng.gen_range(1.0..=n as f64)),
    )?;
    let kernel: Vec<f64> = (0..n.min(3)).map(|_| rng.gen_range(0.1..1.0)).collect();
    let a = match kind {
        OperatorKind::Inpainting => {
            let mut mask: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.7))).collect();
            mask[rng.gen_range(0..n)] = 1;
            build_inpainting(&mask)?
        }
        OperatorKind::Deblurring => build_deblur(&kernel, n)?,
        OperatorKind::Superresolution => build_superres(&build_deblur(&kernel, n)?, 2)?,
        OperatorKind::Custom => {
            return Err(Error::InvalidParameter(
                "random problems need a named operator kind".into(),
            ))
        }
    };
    let b = a.matrix().matvec(&x_true)?;
    Ok((InverseProblem::new(a, b, w, t)?, x_true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::spectral_radius;
    use crate::matrix::validate_stochastic;
    use approx::assert_abs_diff_eq;

    fn inpainting_problem(t: f64) -> InverseProblem {
        let w = kernel_denoiser(&[0.1, 0.7, 0.4, 0.9], 0.5, None).unwrap();
        let a = build_inpainting(&[1, 1, 0, 1]).unwrap();
        let b = a.matrix().matvec(&[0.2, 0.5, 0.3, 0.8]).unwrap();
        InverseProblem::new(a, b, w, t).unwrap()
    }

    #[test]
    fn validation() {
        let w = kernel_denoiser(&[0.1, 0.7, 0.4], 0.5, None).unwrap();
        let a = build_inpainting(&[1, 0, 1]).unwrap();
        assert!(InverseProblem::new(a.clone(), vec![0.0; 2], w.clone(), 1.0).is_err());
        assert!(InverseProblem::new(a.clone(), vec![0.0; 3], w.clone(), 0.0).is_err());
        assert!(InverseProblem::new(a, vec![0.0; 3], w, 1.0).is_ok());
    }

    #[test]
    fn inpainting_converges() {
        let p = inpainting_problem(1.0);
        let trace = pgd_pnp_run(&p, &[0.0; 4], 10_000, 1e-13).unwrap();
        assert!(trace.converged);
        let xs = fixed_point(&p).unwrap();
        assert!(diff_norm2(&trace.final_x, &xs) < 1e-8);
        assert_eq!(trace.error_norms.len(), trace.iterates_kept);
        assert_eq!(trace.loss_values.len(), trace.iterates_kept);
    }

    #[test]
    fn starting_at_fixed_point_stays() {
        let p = inpainting_problem(1.5);
        let xs = fixed_point(&p).unwrap();
        let trace = pgd_pnp_run(&p, &xs, 10, 1e-12).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations, 1);
        assert!(trace.step_norms[0] < 1e-14);
    }

    #[test]
    fn zero_observation_has_zero_fixed_point() {
        let w = kernel_denoiser(&[0.1, 0.7, 0.4], 0.5, None).unwrap();
        let p = InverseProblem::new(build_inpainting(&[1, 0, 1]).unwrap(), vec![0.0; 3], w, 1.0)
            .unwrap();
        assert!(fixed_point(&p).unwrap().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn counterexample_diverges() {
        let w = validate_stochastic(
            &DenseMatrix::from_rows(&[[0.7, 0.3], [0.6, 0.4]]).unwrap(),
            1e-12,
        )
        .unwrap();
        // AᵀA = [[3.4, −6.5], [−6.5, 12.6]] via its Cholesky factor
        let l11 = 3.4f64.sqrt();
        let l21 = -6.5 / l11;
        let l22 = (12.6 - l21 * l21).sqrt();
        let a = DenseMatrix::from_rows(&[[l11, l21], [0.0, l22]]).unwrap();
        let p = InverseProblem::new(ForwardOperator::custom(a).unwrap(), vec![1.0, 1.0], w, 0.25)
            .unwrap();
        let trace = pgd_pnp_run(&p, &[0.3, -0.2], 500, 1e-10).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.iterations, 500);
    }

    #[test]
    fn affine_examples() {
        let m = DenseMatrix::zeros(3, 3);
        let c = [1.0, -2.0, 0.5];
        let trace = affine_iterate(&m, &c, &[9.0, 9.0, 9.0], 10, 1e-12).unwrap();
        assert_eq!(trace.final_x, c);
        assert!(trace.converged && trace.iterations == 2);

        let alpha = 0.8;
        let m = DenseMatrix::identity(2).scaled(alpha).unwrap();
        let trace = affine_iterate(&m, &[0.0, 0.0], &[1.0, -1.0], 60, 0.0).unwrap();
        assert_abs_diff_eq!(empirical_rate(&trace).unwrap(), alpha, epsilon = 1e-10);
    }

    #[test]
    fn rate_needs_data() {
        let m = DenseMatrix::identity(2).scaled(0.5).unwrap();
        let trace = affine_iterate(&m, &[0.0, 0.0], &[1.0, 1.0], 4, 0.0).unwrap();
        assert_eq!(trace.error_norms.len(), 5);
        assert!(matches!(
            empirical_rate(&trace),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rate_tracks_spectral_radius() {
        let p = inpainting_problem(1.0);
        let rho = spectral_radius(&p.iteration_matrix().unwrap())
            .unwrap()
            .radius;
        let trace = pgd_pnp_run(&p, &[0.0; 4], 20_000, 1e-14).unwrap();
        let rate = trace.estimated_rate.unwrap();
        assert!((rate - rho).abs() < 0.02, "rate {rate} vs rho {rho}");
    }

    #[test]
    fn trace_csv() {
        let p = inpainting_problem(1.0);
        let trace = pgd_pnp_run(&p, &[0.0; 4], 3, 0.0).unwrap();
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("k,error_norm,loss\n0,"));
    }

    #[test]
    fn random_problems_build() {
        for kind in [
            OperatorKind::Inpainting,
            OperatorKind::Deblurring,
            OperatorKind::Superresolution,
        ] {
            let (p, x) = random_problem(kind, 6, 1.0, 3).unwrap();
            assert_eq!(x.len(), 6);
            assert_eq!(p.n(), 6);
        }
        assert!(random_problem(OperatorKind::Custom, 4, 1.0, 0).is_err());
    }
}
