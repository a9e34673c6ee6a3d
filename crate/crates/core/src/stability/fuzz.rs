//! Randomized search for violations of the step-size conjecture.
//!
//! Every trial is a pure function of its seed. Campaigns run trials on a
//! dedicated thread pool and collect them in seed order, so the output does
//! not depend on the number of workers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{interior_grid, Certificate};
use crate::error::{Error, Result};
use crate::generate::{self, rng_for, TrialRng};
use crate::operators::{
    build_deblur, build_superres, conjecture_hypotheses, gram, gram_matrix, kernel_denoiser,
    make_family, ConjectureHypotheses, OperatorFamily, Which,
};

/// Interior points of `(0, 2/ρ(B))` scanned per family.
pub const FUZZ_GRID_POINTS: usize = 256;
/// A trial violates when `ρ ≥ 1 − STRICT_SLACK` somewhere on the scan.
pub const STRICT_SLACK: f64 = 1e-12;
const MAX_REJECTIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Imaging,
    GeneralPsd,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Imaging => "imaging",
            Generator::GeneralPsd => "general_psd",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "imaging" => Ok(Generator::Imaging),
            "general_psd" => Ok(Generator::GeneralPsd),
            other => Err(Error::InvalidParameter(format!(
                "unknown generator {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HypothesesUnmet,
    Pass,
    Violation,
}

/// The generated matrices, attached to violations so they can be replayed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureTrialResult {
    pub seed: u64,
    pub n: usize,
    pub generator: Generator,
    pub hypotheses: ConjectureHypotheses,
    pub verdict: Verdict,
    /// Largest spectral radius seen on the scan; absent when not scanned.
    pub max_rho: Option<f64>,
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub instance: Option<Instance>,
}

/// `W` from a kernel denoiser of a random signal, `B` the Gram matrix of a
/// random periodic blur, possibly followed by row subsampling.
pub fn imaging_instance(n: usize, rng: &mut TrialRng) -> Result<OperatorFamily> {
    let signal = generate::uniform_vector(n, 0.0, 1.0, rng);
    let h = rng.gen_range(0.25..1.0);
    let spatial = if rng.gen_bool(0.5) {
        Some(rng.gen_range(1.0..=n as f64))
    } else {
        None
    };
    let w = kernel_denoiser(&signal, h, spatial)?;
    let len = rng.gen_range(1..=n.min(3));
    let kernel: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let blur = build_deblur(&kernel, n)?;
    let (a, label) = if rng.gen_bool(0.5) {
        (blur, "deblurring")
    } else {
        let stride = rng.gen_range(2..=n.min(3));
        (build_superres(&blur, stride)?, "superresolution")
    };
    Ok(make_family(w, gram(&a))?.with_label(format!("imaging {label}")))
}

/// Strictly positive row-normalised `W` and `B = GᵀG` rescaled to
/// `ρ(B) = 1`, resampling `G` until the conjecture's hypotheses hold.
pub fn general_psd_instance(n: usize, rng: &mut TrialRng) -> Result<OperatorFamily> {
    let w = generate::positive_stochastic(n, rng);
    for _ in 0..MAX_REJECTIONS {
        let rank = rng.gen_range(1..=n);
        let g = generate::uniform_matrix(rank, n, -1.0, 1.0, rng);
        let b = gram_matrix(&g);
        let rho = crate::operators::spectral_radius_of_b(&b)?;
        if !(rho > 0.0) {
            continue;
        }
        let family = make_family(w.clone(), b.scaled(1.0 / rho)?)?;
        if conjecture_hypotheses(&family).all_hold() {
            return Ok(family.with_label("general_psd"));
        }
    }
    Err(Error::GenerationExhausted(MAX_REJECTIONS))
}

/// Hypotheses, verdict, largest radius and first violation for one family.
pub fn evaluate_conjecture(
    family: &OperatorFamily,
) -> Result<(
    ConjectureHypotheses,
    Verdict,
    Option<f64>,
    Option<Certificate>,
)> {
    let hypotheses = conjecture_hypotheses(family);
    if !hypotheses.all_hold() {
        return Ok((hypotheses, Verdict::HypothesesUnmet, None, None));
    }
    let grid = interior_grid(family.step_bound(), FUZZ_GRID_POINTS);
    let mut max_rho = f64::NEG_INFINITY;
    let mut first: Option<Certificate> = None;
    for &t in &grid {
        for which in Which::BOTH {
            let rho = family.rho(which, t)?;
            max_rho = max_rho.max(rho);
            if first.is_none() && rho >= 1.0 - STRICT_SLACK {
                first = Some(Certificate { t, rho, which });
            }
        }
    }
    let verdict = if first.is_some() {
        Verdict::Violation
    } else {
        Verdict::Pass
    };
    Ok((hypotheses, verdict, Some(max_rho), first))
}

pub fn conjecture_trial(
    n: usize,
    generator: Generator,
    seed: u64,
) -> Result<ConjectureTrialResult> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n}, need n >= 2")));
    }
    let mut rng = rng_for(seed);
    let family = match generator {
        Generator::Imaging => imaging_instance(n, &mut rng)?,
        Generator::GeneralPsd => general_psd_instance(n, &mut rng)?,
    };
    let (hypotheses, verdict, max_rho, certificate) = evaluate_conjecture(&family)?;
    let instance = (verdict == Verdict::Violation).then(|| Instance {
        w: family.w().matrix().to_rows(),
        b: family.b().to_rows(),
    });
    Ok(ConjectureTrialResult {
        seed,
        n,
        generator,
        hypotheses,
        verdict,
        max_rho,
        certificate,
        instance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub trials: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub generators: Vec<Generator>,
    pub base_seed: u64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeededCertificate {
    pub seed: u64,
    pub n: usize,
    pub generator: Generator,
    #[serde(flatten)]
    pub certificate: Certificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub trials: usize,
    pub pass: usize,
    pub violation: usize,
    pub hypotheses_unmet: usize,
    /// Closest approach to instability over all scanned trials.
    pub max_rho: Option<f64>,
    pub certificates: Vec<SeededCertificate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    pub results: Vec<ConjectureTrialResult>,
    pub summary: CampaignSummary,
}

impl Campaign {
    /// One JSON object per trial, then `{"summary": …}`.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(
            &serde_json::json!({ "summary": self.summary }),
        )?);
        out.push('\n');
        Ok(out)
    }
}

/// Dimension of trial `seed`, drawn from a stream separate from the one the
/// trial itself consumes.
fn trial_dimension(seed: u64, n_min: usize, n_max: usize) -> usize {
    let mut rng = rng_for(seed);
    rng.set_stream(1);
    rng.gen_range(n_min..=n_max)
}

pub fn run_campaign(config: &CampaignConfig) -> Result<Campaign> {
    let CampaignConfig {
        trials,
        n_min,
        n_max,
        ref generators,
        base_seed,
        workers,
    } = *config;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if n_min < 2 || n_max < n_min {
        return Err(Error::InvalidParameter(format!(
            "n range {n_min}..={n_max}"
        )));
    }
    if generators.is_empty() || workers == 0 {
        return Err(Error::InvalidParameter(
            "need a generator and at least one worker".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let results = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let seed = base_seed.wrapping_add(i as u64);
                let n = trial_dimension(seed, n_min, n_max);
                conjecture_trial(n, generators[i % generators.len()], seed)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let count = |v: Verdict| results.iter().filter(|r| r.verdict == v).count();
    let summary = CampaignSummary {
        trials,
        pass: count(Verdict::Pass),
        violation: count(Verdict::Violation),
        hypotheses_unmet: count(Verdict::HypothesesUnmet),
        max_rho: results.iter().filter_map(|r| r.max_rho).reduce(f64::max),
        certificates: results
            .iter()
            .filter_map(|r| {
                r.certificate.map(|certificate| SeededCertificate {
                    seed: r.seed,
                    n: r.n,
                    generator: r.generator,
                    certificate,
                })
            })
            .collect(),
    };
    Ok(Campaign { results, summary })
}
