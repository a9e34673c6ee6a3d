//! Seeded random instance generators.
//!
//! All randomness flows through [`TrialRng`], ChaCha8 seeded from a `u64`
//! via `seed_from_u64`, so instances are reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::matrix::{row_normalize, DenseMatrix, StochasticMatrix};
use crate::operators::{alpha_beta_b, gram_matrix, spectral_radius_of_b};

pub type TrialRng = ChaCha8Rng;

pub fn rng_for(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sweeps of alternating row/column normalisation used for doubly
/// stochastic matrices.
pub const SINKHORN_SWEEPS: usize = 200;
pub const SINKHORN_TOL: f64 = 1e-12;

/// Alternate row and column normalisation of a positive matrix.
pub fn sinkhorn(m: &DenseMatrix, sweeps: usize, tol: f64) -> Result<DenseMatrix> {
    let n = m.require_square()?;
    let mut a = m.as_slice().to_vec();
    for _ in 0..sweeps {
        for i in 0..n {
            let s: f64 = a[i * n..(i + 1) * n].iter().sum();
            a[i * n..(i + 1) * n].iter_mut().for_each(|v| *v /= s);
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| a[i * n + j]).sum();
            (0..n).for_each(|i| a[i * n + j] /= s);
        }
        let worst_row = (0..n)
            .map(|i| (a[i * n..(i + 1) * n].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        if worst_row <= tol {
            break;
        }
    }
    DenseMatrix::new(n, n, a)
}

pub fn uniform_matrix(
    rows: usize,
    cols: usize,
    lo: f64,
    hi: f64,
    rng: &mut TrialRng,
) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(lo..hi)).collect();
    DenseMatrix::new(rows, cols, data).expect("finite")
}

/// Row-normalised matrix with entries drawn from `[0.05, 1)`.
pub fn positive_stochastic(n: usize, rng: &mut TrialRng) -> StochasticMatrix {
    row_normalize(&uniform_matrix(n, n, 0.05, 1.0, rng)).expect("positive rows")
}

pub fn doubly_stochastic(n: usize, rng: &mut TrialRng) -> Result<StochasticMatrix> {
    let balanced = sinkhorn(
        &uniform_matrix(n, n, 0.05, 1.0, rng),
        SINKHORN_SWEEPS,
        SINKHORN_TOL,
    )?;
    row_normalize(&balanced)
}

/// Irreducible stochastic matrix: a random Hamiltonian cycle plus extra
/// edges with a random density that is sometimes zero, in which case the
/// result is a periodic permutation.
pub fn irreducible_stochastic(n: usize, rng: &mut TrialRng) -> StochasticMatrix {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut m = DenseMatrix::zeros(n, n);
    let data = m.as_mut_slice();
    for k in 0..n {
        let (i, j) = (order[k], order[(k + 1) % n]);
        data[i * n + j] = rng.gen_range(0.1..1.0);
    }
    let density: f64 = if rng.gen_bool(0.25) {
        0.0
    } else {
        rng.gen_range(0.0..0.6)
    };
    for v in data.iter_mut() {
        if *v == 0.0 && rng.gen_bool(density) {
            *v = rng.gen_range(0.01..1.0);
        }
    }
    row_normalize(&m).expect("every row has its cycle edge")
}

/// `GᵀG` for a random `m × n` matrix `G` with `1 ≤ m ≤ n`, rescaled so that
/// `ρ(B)` lies in `[0.25, 4)`.
pub fn psd_matrix(n: usize, rng: &mut TrialRng) -> Result<DenseMatrix> {
    let rank = rng.gen_range(1..=n);
    let g = uniform_matrix(rank, n, -1.0, 1.0, rng);
    let b = gram_matrix(&g);
    let target: f64 = rng.gen_range(0.25..4.0);
    let rho = spectral_radius_of_b(&b)?;
    b.scaled(target / rho)
}

/// PSD matrix with `Be = 0`: `GᵀG` with every row of `G` orthogonal to `e`.
pub fn psd_with_null_e(n: usize, rng: &mut TrialRng) -> Result<DenseMatrix> {
    let rank = rng.gen_range(1..n.max(2));
    let mut g = uniform_matrix(rank, n, -1.0, 1.0, rng);
    let data = g.as_mut_slice();
    for r in 0..rank {
        let row = &mut data[r * n..(r + 1) * n];
        let mean = row.iter().sum::<f64>() / n as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    Ok(gram_matrix(&g))
}

/// Nonzero nonnegative diagonal, each entry zero with probability 1/3.
pub fn nonnegative_diagonal(n: usize, rng: &mut TrialRng) -> DenseMatrix {
    loop {
        let d: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(1.0 / 3.0) {
                    0.0
                } else {
                    rng.gen_range(0.05..3.0)
                }
            })
            .collect();
        if d.iter().any(|&v| v > 0.0) {
            return DenseMatrix::diag(&d);
        }
    }
}

/// `(α, β, αI + βE)` with `α ≥ 0`, `α + nβ > 0`; about a third of the draws
/// have `β < 0` and a sixth have `α = 0`.
pub fn alpha_beta(n: usize, rng: &mut TrialRng) -> Result<(f64, f64, DenseMatrix)> {
    let nf = n as f64;
    let (alpha, beta) = match rng.gen_range(0..6) {
        0 => (0.0, rng.gen_range(0.05..1.0)),
        1 | 2 => {
            let alpha = rng.gen_range(0.1..3.0);
            // β ∈ (−α/n, 0): keeps α + nβ > 0
            let frac: f64 = rng.gen_range(0.05..0.95);
            (alpha, -frac * alpha / nf)
        }
        _ => (rng.gen_range(0.0..3.0), rng.gen_range(0.01..1.0)),
    };
    Ok((alpha, beta, alpha_beta_b(alpha, beta, n)?))
}

pub fn uniform_vector(n: usize, lo: f64, hi: f64, rng: &mut TrialRng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}
