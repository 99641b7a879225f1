use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::embed::{sample_isotropic, GaussianSpec};
use crate::error::{Error, Result};
use crate::linalg::random_unit;
use crate::rng::SeedTree;

const MC_CHUNK: usize = 4096;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Log-volume of the `d`-ball of radius `r`.
fn ln_ball_volume(d: usize, r: f64) -> f64 {
    let half = d as f64 / 2.0;
    half * std::f64::consts::PI.ln() - ln_gamma(half + 1.0) + d as f64 * r.ln()
}

/// Estimates `P(‖z - z'‖ <= ε)` for independent `z ~ spec_f`, `z' ~ spec_g`,
/// i.e. the double integral of `mu_f(z)` times the `mu_g`-mass of the closed
/// ε-ball around `z`.
///
/// The inner ball mass is sampled by drawing a point `u` uniformly in the
/// ball and weighting by `vol(B_ε) * mu_g(u)`, which stays accurate for the
/// small ε where hit-or-miss sampling would see almost no matches. Samples are
/// processed in fixed chunks with per-chunk substreams, so results do not
/// depend on the number of worker threads.
pub fn estimate_size_mc(
    spec_f: &GaussianSpec,
    spec_g: &GaussianSpec,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SizeEstimate> {
    let dim = crate::embed::gaussian_check_same_dim(spec_f, spec_g)?;
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be >= 1"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    if epsilon == 0.0 {
        return Ok(SizeEstimate {
            value: 0.0,
            std_error: 0.0,
            n_samples,
        });
    }
    let ln_vol = ln_ball_volume(dim, epsilon);
    let tree = SeedTree::new(seed);
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = tree.indexed("size-mc", chunk as u64);
            let count = MC_CHUNK.min(n_samples - chunk * MC_CHUNK);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..count {
                let z = sample_isotropic(spec_f, &mut rng);
                let dir = random_unit(dim, &mut rng);
                let radius = epsilon * rng.random::<f64>().powf(1.0 / dim as f64);
                let u: Vec<f64> = z.iter().zip(dir.iter()).map(|(a, b)| a + radius * b).collect();
                let w = (ln_vol + spec_g.log_density(&u)).exp();
                s += w;
                s2 += w * w;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_samples as f64;
    let mean = s / n;
    let var = if n_samples > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SizeEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}

/// `ε^d * exp(-‖mu_f - mu_g‖² / (2 (σ_f² + σ_g²)))`.
///
/// This is the asymptotic proportionality for Gaussian densities, not a
/// probability; compare it against estimates through slopes, not values.
pub fn closed_form_gaussian_size(spec_f: &GaussianSpec, spec_g: &GaussianSpec, epsilon: f64) -> Result<f64> {
    let dim = crate::embed::gaussian_check_same_dim(spec_f, spec_g)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon must be finite and > 0, got {epsilon}")));
    }
    let sep2: f64 = spec_f.mean().iter().zip(spec_g.mean()).map(|(a, b)| (a - b) * (a - b)).sum();
    let total_var = spec_f.variance() + spec_g.variance();
    Ok(epsilon.powi(dim as i32) * (-sep2 / (2.0 * total_var)).exp())
}
