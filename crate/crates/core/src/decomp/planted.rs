use nalgebra::DVector;
use rand_distr::{Distribution, Normal};

use super::allocate::DimensionPlan;
use super::decomposition::Decomposition;
use crate::embed::{EmbeddedCorpus, LabeledVector};
use crate::error::{Error, Result};
use crate::linalg::random_orthogonal;
use crate::rng::SeedTree;

/// Synthetic paired data with a known decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedConfig {
    pub plan: DimensionPlan,
    pub n_pairs: usize,
    /// Standard deviation of shared and modality-specific coordinates.
    pub signal_scale: f64,
    /// Standard deviation of isotropic noise added to every point.
    pub noise_sd: f64,
    pub seed: u64,
}

impl PlantedConfig {
    pub fn new(plan: DimensionPlan, n_pairs: usize, seed: u64) -> Self {
        Self {
            plan,
            n_pairs,
            signal_scale: 1.0,
            noise_sd: 1e-3,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedModel {
    pub corpus: EmbeddedCorpus,
    pub truth: Decomposition,
}

/// Draws a random orthogonal decomposition, then for pair `k` samples shared
/// coordinates `c` once and modality coordinates `a`, `b` independently:
/// `x_k = S c + I a + noise`, `y_k = S c + T b + noise`.
pub fn planted_model(cfg: &PlantedConfig) -> Result<PlantedModel> {
    if cfg.n_pairs == 0 {
        return Err(Error::domain("planted model needs at least one pair"));
    }
    if !(cfg.signal_scale > 0.0 && cfg.signal_scale.is_finite()) || !(cfg.noise_sd >= 0.0 && cfg.noise_sd.is_finite()) {
        return Err(Error::domain("planted model needs positive signal scale and non-negative noise"));
    }
    let (ds, di, dt) = cfg.plan.as_tuple();
    let dim = cfg.plan.dim();
    let tree = SeedTree::new(cfg.seed);
    let q = random_orthogonal(dim, &mut tree.stream("planted-basis"));
    let truth = Decomposition::from_orthogonal(&q, ds, di, dt)?;

    let signal = Normal::new(0.0, cfg.signal_scale).expect("validated scale");
    let noise = Normal::new(0.0, cfg.noise_sd).expect("validated noise");
    let mut rng = tree.stream("planted-points");
    let b = truth.bases();
    let mut images = Vec::with_capacity(cfg.n_pairs);
    let mut texts = Vec::with_capacity(cfg.n_pairs);
    let mut pairs = Vec::with_capacity(cfg.n_pairs);
    for k in 0..cfg.n_pairs {
        let c = DVector::from_fn(ds, |_, _| signal.sample(&mut rng));
        let a = DVector::from_fn(di, |_, _| signal.sample(&mut rng));
        let t = DVector::from_fn(dt, |_, _| signal.sample(&mut rng));
        let shared = &b.shared * c;
        let x = &shared + &b.image * a + DVector::from_fn(dim, |_, _| noise.sample(&mut rng));
        let y = &shared + &b.text * t + DVector::from_fn(dim, |_, _| noise.sample(&mut rng));
        let (ii, tt) = (format!("img{k}"), format!("txt{k}"));
        images.push(LabeledVector::new(ii.clone(), x.as_slice().to_vec()));
        texts.push(LabeledVector::new(tt.clone(), y.as_slice().to_vec()));
        pairs.push((ii, tt));
    }
    Ok(PlantedModel {
        corpus: EmbeddedCorpus::new(dim, images, texts, pairs)?,
        truth,
    })
}
