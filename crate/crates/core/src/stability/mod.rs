//! Spectral-radius profiles over `t`, stability-threshold search, bound
//! checks for the known stability results, slope checks and the randomized
//! conjecture fuzzer.

mod fuzz;
mod suites;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use fuzz::{
    conjecture_trial, evaluate_conjecture, general_psd_instance, imaging_instance, run_campaign,
    Campaign, CampaignConfig, CampaignSummary, ConjectureTrialResult, Generator, Instance,
    SeededCertificate, Verdict, FUZZ_GRID_POINTS, STRICT_SLACK,
};
pub use suites::{
    check_theorem_bound, run_suite, suite_instance, theorem_hypothesis_failures, SuiteReport,
    SuiteTrial, Theorem, SUITE_SLACK,
};

use crate::error::{Error, Result};
use crate::io::fmt_sig;
use crate::operators::{OperatorFamily, Which};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityProfile {
    pub family_labels: Vec<String>,
    pub grid: Vec<f64>,
    #[serde(rename = "rho_P")]
    pub rho_p: Vec<Option<f64>>,
    #[serde(rename = "rho_R")]
    pub rho_r: Vec<Option<f64>>,
}

impl StabilityProfile {
    pub fn to_csv(&self) -> String {
        let cell = |v: &Option<f64>| v.map(|x| fmt_sig(x, 12)).unwrap_or_default();
        let mut out = String::from("t,rho_P,rho_R\n");
        for ((t, p), r) in self.grid.iter().zip(&self.rho_p).zip(&self.rho_r) {
            out.push_str(&format!("{},{},{}\n", fmt_sig(*t, 12), cell(p), cell(r)));
        }
        out
    }
}

/// `ρ(P(t))` and `ρ(R(t))` on `steps` equally spaced points of
/// `[t_min, t_max]`. A point whose evaluation fails is recorded as absent.
pub fn profile(
    family: &OperatorFamily,
    t_min: f64,
    t_max: f64,
    steps: usize,
) -> Result<StabilityProfile> {
    if !(t_min >= 0.0) || !(t_max > t_min) || !t_max.is_finite() || steps < 2 {
        return Err(Error::InvalidGrid(format!(
            "need 0 <= t_min < t_max and steps >= 2 (got [{t_min}, {t_max}], {steps})"
        )));
    }
    let width = t_max - t_min;
    let grid: Vec<f64> = (0..steps)
        .map(|k| {
            if k == steps - 1 {
                t_max
            } else {
                t_min + width * k as f64 / (steps - 1) as f64
            }
        })
        .collect();
    let (rho_p, rho_r) = grid
        .par_iter()
        .map(|&t| (family.rho(Which::P, t).ok(), family.rho(Which::R, t).ok()))
        .unzip();
    Ok(StabilityProfile {
        family_labels: family.labels.clone(),
        grid,
        rho_p,
        rho_r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    StableThenUnstable,
    UnstableFromStart,
    StableThroughoutScan,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub scan_max: f64,
    pub grid_step: f64,
    pub bisect_tol: f64,
    pub eps0: f64,
}

impl ThresholdParams {
    pub const DEFAULT_GRID_DIVISIONS: f64 = 2048.0;
    pub const DEFAULT_BISECT_TOL: f64 = 1e-6;
    pub const DEFAULT_EPS0: f64 = 1e-4;

    pub fn new(scan_max: f64) -> Self {
        ThresholdParams {
            scan_max,
            grid_step: scan_max / Self::DEFAULT_GRID_DIVISIONS,
            bisect_tol: Self::DEFAULT_BISECT_TOL,
            eps0: Self::DEFAULT_EPS0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.eps0 > 0.0
            && self.eps0 < self.grid_step
            && self.grid_step < self.scan_max
            && self.scan_max.is_finite()
            && self.bisect_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGrid(format!(
                "need 0 < eps0 < grid_step < scan_max and bisect_tol > 0 \
                 (eps0 = {}, grid_step = {}, scan_max = {}, bisect_tol = {})",
                self.eps0, self.grid_step, self.scan_max, self.bisect_tol
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub which: Which,
    pub classification: Classification,
    #[serde(rename = "T_star")]
    pub t_star: Option<f64>,
    pub bracket: Option<[f64; 2]>,
    pub bisect_tol: f64,
    pub scan_max: f64,
    pub grid_step: f64,
    pub eps0: f64,
}

/// First `t > 0` at which `ρ ≥ 1`, located on the grid
/// `eps0, eps0 + grid_step, … ≤ scan_max` and refined by bisection.
pub fn stability_threshold(
    family: &OperatorFamily,
    which: Which,
    params: ThresholdParams,
) -> Result<ThresholdReport> {
    params.validate()?;
    let unstable = |t: f64| -> Result<bool> { Ok(family.rho(which, t)? >= 1.0) };
    let report = |classification, t_star, bracket| ThresholdReport {
        which,
        classification,
        t_star,
        bracket,
        bisect_tol: params.bisect_tol,
        scan_max: params.scan_max,
        grid_step: params.grid_step,
        eps0: params.eps0,
    };

    if unstable(params.eps0)? {
        return Ok(report(Classification::UnstableFromStart, None, None));
    }
    let cells = ((params.scan_max - params.eps0) / params.grid_step + 1e-9).floor() as usize;
    let mut lo = params.eps0;
    for k in 1..=cells {
        let hi = params.eps0 + k as f64 * params.grid_step;
        if unstable(hi)? {
            let (lo, hi) = bisect(&unstable, lo, hi, params.bisect_tol)?;
            let t_star = 0.5 * (lo + hi);
            return Ok(report(
                Classification::StableThenUnstable,
                Some(t_star),
                Some([lo, hi]),
            ));
        }
        lo = hi;
    }
    Ok(report(Classification::StableThroughoutScan, None, None))
}

/// Shrinks `[lo, hi]` keeping `!unstable(lo) && unstable(hi)`.
fn bisect(
    unstable: &impl Fn(f64) -> Result<bool>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if unstable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// A grid point where the spectral radius reached the instability level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub t: f64,
    pub rho: f64,
    pub which: Which,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundScan {
    pub which: Which,
    /// `2/ρ(B)`.
    pub bound: f64,
    pub grid_steps: usize,
    pub slack: f64,
    pub max_rho: f64,
    pub argmax_t: f64,
    /// Smallest grid `t` with `ρ ≥ 1 − slack`.
    pub violation: Option<Certificate>,
    pub pass: bool,
}

/// `t_k = k · (2/ρ(B)) / (grid_steps + 1)` for `k = 1..=grid_steps`.
pub fn interior_grid(bound: f64, grid_steps: usize) -> Vec<f64> {
    (1..=grid_steps)
        .map(|k| k as f64 * bound / (grid_steps + 1) as f64)
        .collect()
}

/// Checks `ρ < 1 − slack` at `grid_steps` interior points of
/// `(0, 2/ρ(B))` without looking at any hypotheses.
pub fn scan_bound(
    family: &OperatorFamily,
    which: Which,
    grid_steps: usize,
    slack: f64,
) -> Result<BoundScan> {
    if grid_steps == 0 {
        return Err(Error::InvalidGrid("grid_steps must be positive".into()));
    }
    let bound = family.step_bound();
    let grid = interior_grid(bound, grid_steps);
    let rhos = grid
        .par_iter()
        .map(|&t| family.rho(which, t))
        .collect::<Result<Vec<f64>>>()?;
    let (argmax, max_rho) =
        rhos.iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, r)| if r > acc.1 { (i, r) } else { acc },
            );
    let violation = rhos
        .iter()
        .position(|&r| r >= 1.0 - slack)
        .map(|i| Certificate {
            t: grid[i],
            rho: rhos[i],
            which,
        });
    Ok(BoundScan {
        which,
        bound,
        grid_steps,
        slack,
        max_rho,
        argmax_t: grid[argmax],
        pass: violation.is_none(),
        violation,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub which: Which,
    pub h: f64,
    pub fd_slope: f64,
    pub predicted: f64,
    pub abs_error: f64,
}

/// One-sided difference `(ρ(h) − 1)/h` against the perturbation slope
/// `−πᵀBe`.
pub fn slope_check(family: &OperatorFamily, which: Which, h: f64) -> Result<SlopeCheck> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("h = {h}")));
    }
    let fd_slope = (family.rho(which, h)? - 1.0) / h;
    let predicted = family.predicted_slope();
    Ok(SlopeCheck {
        which,
        h,
        fd_slope,
        predicted,
        abs_error: (fd_slope - predicted).abs(),
    })
}
