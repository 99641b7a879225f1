use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::join::{distance, join_bruteforce, join_grid, JoinConfig, JoinResult};
use crate::embed::LabeledVector;
use crate::error::{Error, Result};
use crate::linalg::random_unit;
use crate::report::CheckReport;
use crate::rng::SeedTree;

/// Per-point perturbation bound `η` and the seed for drawing perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    eta: f64,
    seed: u64,
}

impl NoiseSpec {
    pub fn new(eta: f64, seed: u64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::domain(format!("eta must be finite and >= 0, got {eta}")));
        }
        Ok(Self { eta, seed })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Adds `δ` with uniform direction and radius uniform in `[0, η]` to every point.
fn perturb<R: Rng + ?Sized>(points: &[LabeledVector], eta: f64, rng: &mut R) -> Vec<LabeledVector> {
    points
        .iter()
        .map(|p| {
            let dir = random_unit(p.vector.len(), rng);
            let r = eta * rng.random::<f64>();
            let v = p.vector.iter().zip(dir.iter()).map(|(a, b)| a + r * b).collect();
            LabeledVector::new(p.id.clone(), v)
        })
        .collect()
}

/// Largest image-to-text distance (0 when either side is empty).
pub fn max_cross_distance(images: &[LabeledVector], texts: &[LabeledVector]) -> f64 {
    images
        .iter()
        .flat_map(|x| texts.iter().map(move |y| distance(&x.vector, &y.vector)))
        .fold(0.0, f64::max)
}

/// Checks that joins are nested along an increasing ε grid and that counts
/// never decrease. When the last ε reaches the largest cross distance the
/// final count must be `|X| * |Y|`.
pub fn verify_monotonicity(
    images: &[LabeledVector],
    texts: &[LabeledVector],
    eps_grid: &[f64],
) -> Result<CheckReport> {
    if eps_grid.is_empty() {
        return Err(Error::domain("epsilon grid must not be empty"));
    }
    if eps_grid[0] < 0.0 || eps_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain("epsilon grid must be non-negative and strictly increasing"));
    }
    let mut report = CheckReport::theorem("monotonicity");
    let mut prev: Option<JoinResult> = None;
    for &eps in eps_grid {
        let cur = join_grid(images, texts, &JoinConfig::new(eps)?)?;
        report.trials += 1;
        if let Some(p) = &prev {
            if !p.is_subset_of(&cur) || cur.len() < p.len() {
                report.fail(json!({
                    "violation": "pair set not nested",
                    "from_epsilon": p.epsilon,
                    "to_epsilon": eps,
                }));
            }
        }
        report.detail(json!({ "epsilon": eps, "count": cur.len() }));
        prev = Some(cur);
    }
    let last = prev.expect("grid is non-empty");
    let diameter = max_cross_distance(images, texts);
    if last.epsilon >= diameter {
        let full = images.len() * texts.len();
        if last.len() != full {
            report.fail(json!({ "violation": "incomplete at diameter", "count": last.len(), "expected": full }));
        }
    }
    Ok(report)
}

/// The two limits: at ε equal to the largest cross distance every pair
/// matches, and at ε = 0 exactly the coincident pairs match.
pub fn verify_convergence(images: &[LabeledVector], texts: &[LabeledVector]) -> Result<CheckReport> {
    let mut report = CheckReport::theorem("convergence");
    let diameter = max_cross_distance(images, texts);
    let full = join_grid(images, texts, &JoinConfig::new(diameter)?)?;
    let expected_full = images.len() * texts.len();
    report.trials += 1;
    let detail = json!({ "epsilon": diameter, "count": full.len(), "expected": expected_full });
    if full.len() == expected_full {
        report.detail(detail);
    } else {
        report.fail(detail);
    }

    let exact = join_grid(images, texts, &JoinConfig::new(0.0)?)?;
    let coincident = images
        .iter()
        .map(|x| texts.iter().filter(|y| y.vector == x.vector).count())
        .sum::<usize>();
    report.trials += 1;
    let detail = json!({ "epsilon": 0.0, "count": exact.len(), "expected": coincident });
    if exact.len() == coincident {
        report.detail(detail);
    } else {
        report.fail(detail);
    }
    Ok(report)
}

/// Perturbs both modalities by at most η per point and checks that the
/// perturbed ε-join is contained in the clean (ε + 2η)-join.
pub fn verify_noise_tolerance(
    images: &[LabeledVector],
    texts: &[LabeledVector],
    cfg: &JoinConfig,
    noise: &NoiseSpec,
    trials: usize,
) -> Result<CheckReport> {
    let mut report = CheckReport::theorem("noise_tolerance");
    let widened = JoinConfig::new(cfg.epsilon() + 2.0 * noise.eta)?;
    let clean = join_grid(images, texts, &widened)?;
    let tree = SeedTree::new(noise.seed);
    let mut passes = 0usize;
    for t in 0..trials {
        let mut rng = tree.indexed("noise-tolerance", t as u64);
        let px = perturb(images, noise.eta, &mut rng);
        let py = perturb(texts, noise.eta, &mut rng);
        let noisy = join_grid(&px, &py, cfg)?;
        report.trials += 1;
        if noisy.is_subset_of(&clean) {
            passes += 1;
        } else {
            report.fail(json!({ "trial": t, "noisy_count": noisy.len(), "clean_count": clean.len() }));
        }
    }
    report.detail(json!({
        "epsilon": cfg.epsilon(),
        "eta": noise.eta,
        "widened_epsilon": widened.epsilon(),
        "passes": passes,
        "trials": trials,
    }));
    Ok(report)
}

const MAX_LISTED_VIOLATIONS: usize = 5;

/// Looks for pairs that enter the ε-join only after perturbation, with the
/// noise bound capped at `ε / 2`. Such a pair refutes the claim that
/// perturbed ε-joins stay inside the clean ε-join whenever `η <= ε / 2`.
///
/// Two searches run: random perturbations (as in the noise-tolerance check)
/// and an adversarial one that, for every clean pair at distance in
/// `(ε, ε + 2η]`, moves both endpoints by η toward each other.
pub fn check_inclusion_claim(
    images: &[LabeledVector],
    texts: &[LabeledVector],
    cfg: &JoinConfig,
    noise: &NoiseSpec,
    trials: usize,
) -> Result<CheckReport> {
    let eps = cfg.epsilon();
    let eta = noise.eta.min(eps / 2.0);
    let mut report = CheckReport::diagnostic("inclusion_claim");
    let clean = join_grid(images, texts, cfg)?;

    let tree = SeedTree::new(noise.seed);
    let mut random_violations = 0usize;
    for t in 0..trials {
        let mut rng = tree.indexed("inclusion-claim", t as u64);
        let px = perturb(images, eta, &mut rng);
        let py = perturb(texts, eta, &mut rng);
        let noisy = join_grid(&px, &py, cfg)?;
        report.trials += 1;
        if !noisy.is_subset_of(&clean) {
            random_violations += 1;
        }
    }

    let mut examples = Vec::new();
    let mut adversarial_violations = 0usize;
    if eta > 0.0 {
        let window = join_bruteforce(images, texts, &JoinConfig::new(eps + 2.0 * eta)?)?;
        let image_of: HashMap<&str, &[f64]> = images.iter().map(|p| (p.id.as_str(), p.vector.as_slice())).collect();
        let text_of: HashMap<&str, &[f64]> = texts.iter().map(|p| (p.id.as_str(), p.vector.as_slice())).collect();
        for pair in window.pairs.iter().filter(|p| p.distance > eps) {
            report.trials += 1;
            let x = image_of[pair.image_id.as_str()];
            let y = text_of[pair.text_id.as_str()];
            let dir: Vec<f64> = x.iter().zip(y).map(|(a, b)| (b - a) / pair.distance).collect();
            let xs: Vec<f64> = x.iter().zip(&dir).map(|(a, u)| a + eta * u).collect();
            let ys: Vec<f64> = y.iter().zip(&dir).map(|(b, u)| b - eta * u).collect();
            let moved = distance(&xs, &ys);
            if moved <= eps {
                adversarial_violations += 1;
                if examples.len() < MAX_LISTED_VIOLATIONS {
                    examples.push(json!({
                        "image_id": pair.image_id,
                        "text_id": pair.text_id,
                        "clean_distance": pair.distance,
                        "perturbed_distance": moved,
                    }));
                }
            }
        }
    }

    let violations = random_violations + adversarial_violations;
    let summary = json!({
        "epsilon": eps,
        "eta_used": eta,
        "random_trials": trials,
        "random_violations": random_violations,
        "adversarial_violations": adversarial_violations,
        "claim_reproducible_as_printed": violations == 0,
        "examples": examples,
    });
    if violations == 0 {
        report.detail(summary);
    } else {
        report.fail(summary);
    }
    Ok(report)
}
