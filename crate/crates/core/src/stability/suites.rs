//! Seeded instance families for the known stability results and the grid
//! check of their common bound `ρ < 1` on `(0, 2/ρ(B))`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{scan_bound, BoundScan};
use crate::error::{Error, Result};
use crate::generate::{self, rng_for};
use crate::matrix::{is_positive_semidefinite, row_normalize, Pattern};
use crate::operators::{
    build_inpainting, conjecture_hypotheses, gram, make_family, OperatorFamily, Which,
    HYPOTHESIS_TOL,
};

/// Violation level used by the theorem suites: `ρ ≥ 1 − SUITE_SLACK` fails.
pub const SUITE_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Doubly stochastic `W` with `WᵀW`, `WWᵀ` irreducible; PSD `B`, `Be ≠ 0`.
    DblStochastic,
    /// Irreducible `W`; nonzero diagonal `B ≥ 0`.
    Inpainting,
    /// Primitive `W`; PSD `B = αI + βE` with `Be ≠ 0`.
    AlphaBeta,
    /// Primitive `W`; PSD `B` with `Be ≤ ρ(B)e` and `πᵀBe > 0`.
    Conjecture,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [
        Theorem::DblStochastic,
        Theorem::Inpainting,
        Theorem::AlphaBeta,
        Theorem::Conjecture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::DblStochastic => "dbl_stochastic",
            Theorem::Inpainting => "inpainting",
            Theorem::AlphaBeta => "alpha_beta",
            Theorem::Conjecture => "conjecture",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theorem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

fn be_nonzero(family: &OperatorFamily) -> bool {
    let scale = family.b().max_abs().max(1.0);
    family
        .b_times_e()
        .iter()
        .any(|v| v.abs() > HYPOTHESIS_TOL * scale)
}

fn psd(family: &OperatorFamily) -> bool {
    is_positive_semidefinite(family.b(), HYPOTHESIS_TOL).unwrap_or(false)
}

/// `Some((α, β))` when `B = αI + βE` within tolerance.
fn alpha_beta_form(family: &OperatorFamily) -> Option<(f64, f64)> {
    let b = family.b();
    let n = family.n();
    let tol = HYPOTHESIS_TOL * b.max_abs().max(1.0);
    let beta = if n > 1 { b[(0, 1)] } else { 0.0 };
    let alpha = b[(0, 0)] - beta;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { alpha + beta } else { beta };
            if (b[(i, j)] - want).abs() > tol {
                return None;
            }
        }
    }
    Some((alpha, beta))
}

/// Unmet hypotheses of `theorem` for `family`, empty when all hold.
pub fn theorem_hypothesis_failures(family: &OperatorFamily, theorem: Theorem) -> Vec<String> {
    let mut out = Vec::new();
    let mut need = |ok: bool, msg: &str| {
        if !ok {
            out.push(msg.to_string());
        }
    };
    let s = family.structure();
    match theorem {
        Theorem::DblStochastic => {
            let w = family.w().matrix();
            let wt = w.transpose();
            let irreducible = |m: crate::error::Result<crate::matrix::DenseMatrix>| {
                m.map(|m| Pattern::of(&m).is_irreducible()).unwrap_or(false)
            };
            need(s.doubly_stochastic, "W not doubly stochastic");
            need(irreducible(wt.mul(w)), "W^T W not irreducible");
            need(irreducible(w.mul(&wt)), "W W^T not irreducible");
            need(psd(family), "B not positive semidefinite");
            need(be_nonzero(family), "Be = 0");
        }
        Theorem::Inpainting => {
            let b = family.b();
            need(s.irreducible, "W not irreducible");
            need(b.is_diagonal(), "B not diagonal");
            need(b.is_nonnegative(), "B has negative entries");
            need(!b.is_zero(), "B = 0");
        }
        Theorem::AlphaBeta => {
            need(s.primitive, "W not primitive");
            match alpha_beta_form(family) {
                None => need(false, "B not of the form alpha I + beta E"),
                Some(_) => {
                    need(psd(family), "B not positive semidefinite");
                    need(be_nonzero(family), "Be = 0");
                }
            }
        }
        Theorem::Conjecture => {
            let h = conjecture_hypotheses(family);
            out.extend(h.failures().into_iter().map(String::from));
        }
    }
    out
}

/// Hypotheses first, then the interior grid check with [`SUITE_SLACK`].
pub fn check_theorem_bound(
    family: &OperatorFamily,
    which: Which,
    theorem: Theorem,
    grid_steps: usize,
) -> Result<BoundScan> {
    let failures = theorem_hypothesis_failures(family, theorem);
    if !failures.is_empty() {
        return Err(Error::HypothesesUnmet(format!(
            "{theorem}: {}",
            failures.join("; ")
        )));
    }
    scan_bound(family, which, grid_steps, SUITE_SLACK)
}

/// Seeded random family satisfying the hypotheses of `theorem`.
pub fn suite_instance(theorem: Theorem, n: usize, seed: u64) -> Result<OperatorFamily> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
    }
    let mut rng = rng_for(seed);
    let family = match theorem {
        Theorem::DblStochastic => {
            let w = generate::doubly_stochastic(n, &mut rng)?;
            make_family(w, generate::psd_matrix(n, &mut rng)?)?
        }
        Theorem::Inpainting => {
            let w = generate::irreducible_stochastic(n, &mut rng);
            let b = if rng.gen_bool(0.5) {
                let mut mask: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
                let keep = rng.gen_range(0..n);
                mask[keep] = 1;
                gram(&build_inpainting(&mask)?)
            } else {
                generate::nonnegative_diagonal(n, &mut rng)
            };
            make_family(w, b)?
        }
        Theorem::AlphaBeta => {
            let w = generate::irreducible_stochastic(n, &mut rng);
            let w = if crate::matrix::structure(&w).primitive {
                w
            } else {
                // a positive diagonal entry makes an irreducible matrix primitive
                let mut m = w.into_matrix();
                let i = rng.gen_range(0..n);
                m.as_mut_slice()[i * n + i] += rng.gen_range(0.1..1.0);
                row_normalize(&m)?
            };
            let (_, _, b) = generate::alpha_beta(n, &mut rng)?;
            make_family(w, b)?
        }
        Theorem::Conjecture => super::general_psd_instance(n, &mut rng)?,
    };
    Ok(family.with_label(format!("{theorem} n={n} seed={seed}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteTrial {
    pub seed: u64,
    pub n: usize,
    pub hypothesis_failures: Vec<String>,
    pub scans: Vec<BoundScan>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub theorem: Theorem,
    pub trials: Vec<SuiteTrial>,
    pub violations: usize,
    pub hypotheses_unmet: usize,
    pub pass: bool,
}

/// Runs `trials` instances with seeds `seed, seed + 1, …` and dimensions
/// cycling through `n_min..=n_max`, checking both families.
pub fn run_suite(
    theorem: Theorem,
    trials: usize,
    n_min: usize,
    n_max: usize,
    seed: u64,
    grid_steps: usize,
) -> Result<SuiteReport> {
    if trials == 0 || n_min < 2 || n_max < n_min {
        return Err(Error::InvalidParameter(format!(
            "trials = {trials}, n range {n_min}..={n_max}"
        )));
    }
    let span = n_max - n_min + 1;
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials {
        let trial_seed = seed.wrapping_add(i as u64);
        let n = n_min + i % span;
        let family = suite_instance(theorem, n, trial_seed)?;
        let failures = theorem_hypothesis_failures(&family, theorem);
        let scans = if failures.is_empty() {
            Which::BOTH
                .iter()
                .map(|&w| scan_bound(&family, w, grid_steps, SUITE_SLACK))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let pass = failures.is_empty() && scans.iter().all(|s| s.pass);
        out.push(SuiteTrial {
            seed: trial_seed,
            n,
            hypothesis_failures: failures,
            scans,
            pass,
        });
    }
    let hypotheses_unmet = out
        .iter()
        .filter(|t| !t.hypothesis_failures.is_empty())
        .count();
    let violations = out
        .iter()
        .filter(|t| t.scans.iter().any(|s| !s.pass))
        .count();
    Ok(SuiteReport {
        theorem,
        pass: out.iter().all(|t| t.pass),
        trials: out,
        violations,
        hypotheses_unmet,
    })
}
