use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::corpus::{EmbeddedCorpus, LabeledVector};
use crate::error::{Error, Result};
use crate::rng::SeedTree;

/// Isotropic Gaussian `N(mean, variance * I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    variance: f64,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::domain("Gaussian mean must have at least one entry"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::domain("Gaussian mean must be finite"));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::domain(format!("Gaussian variance must be positive, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    /// Zero-mean Gaussian with the given variance.
    pub fn centered(dim: usize, variance: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], variance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Density at `z`.
    pub fn density(&self, z: &[f64]) -> f64 {
        self.log_density(z).exp()
    }

    pub fn log_density(&self, z: &[f64]) -> f64 {
        let d = self.dim() as f64;
        let sq: f64 = z.iter().zip(&self.mean).map(|(a, m)| (a - m) * (a - m)).sum();
        -0.5 * sq / self.variance - 0.5 * d * (2.0 * std::f64::consts::PI * self.variance).ln()
    }
}

pub(crate) fn check_same_dim(a: &GaussianSpec, b: &GaussianSpec) -> Result<usize> {
    if a.dim() != b.dim() {
        return Err(Error::domain(format!(
            "Gaussian dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a.dim())
}

/// One draw from `spec`.
pub fn sample_isotropic<R: Rng + ?Sized>(spec: &GaussianSpec, rng: &mut R) -> Vec<f64> {
    let sd = spec.std_dev();
    spec.mean
        .iter()
        .map(|m| m + sd * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Draws `n_f` image points from `spec_f` and `n_t` text points from `spec_g`.
pub fn sample_gaussian_corpus(
    spec_f: &GaussianSpec,
    spec_g: &GaussianSpec,
    n_f: usize,
    n_t: usize,
    seed: u64,
) -> Result<EmbeddedCorpus> {
    let dim = check_same_dim(spec_f, spec_g)?;
    if n_f == 0 || n_t == 0 {
        return Err(Error::domain("both modalities need at least one point"));
    }
    let tree = SeedTree::new(seed);
    let mut rng_f = tree.stream("gaussian-image");
    let mut rng_g = tree.stream("gaussian-text");
    let images = (0..n_f)
        .map(|k| LabeledVector::new(format!("img{k}"), sample_isotropic(spec_f, &mut rng_f)))
        .collect();
    let texts = (0..n_t)
        .map(|k| LabeledVector::new(format!("txt{k}"), sample_isotropic(spec_g, &mut rng_g)))
        .collect();
    EmbeddedCorpus::new(dim, images, texts, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_mean_within_standard_error() {
        let spec = GaussianSpec::centered(2, 1.0).unwrap();
        let c = sample_gaussian_corpus(&spec, &spec, 1000, 1000, 7).unwrap();
        let bound = 4.0 * 1.0 / (1000f64).sqrt();
        for set in [c.images(), c.texts()] {
            for axis in 0..2 {
                let mean: f64 = set.iter().map(|p| p.vector[axis]).sum::<f64>() / 1000.0;
                assert!(mean.abs() < bound, "axis {axis} mean {mean}");
            }
        }
        assert_eq!(c.images().len(), 1000);
        assert!(c.pairs().is_empty());
    }

    #[test]
    fn variance_moment_check() {
        let spec = GaussianSpec::new(vec![1.0, -2.0, 0.5], 2.5).unwrap();
        let c = sample_gaussian_corpus(&spec, &spec, 10_000, 1, 3).unwrap();
        for axis in 0..3 {
            let xs: Vec<f64> = c.images().iter().map(|p| p.vector[axis]).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!((v - 2.5).abs() <= 0.25, "axis {axis} variance {v}");
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GaussianSpec::centered(2, 0.0).is_err());
        assert!(GaussianSpec::centered(2, -1.0).is_err());
        assert!(GaussianSpec::new(vec![f64::NAN], 1.0).is_err());
        let a = GaussianSpec::centered(2, 1.0).unwrap();
        let b = GaussianSpec::centered(3, 1.0).unwrap();
        assert!(sample_gaussian_corpus(&a, &b, 1, 1, 0).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let a = GaussianSpec::centered(3, 1.0).unwrap();
        let c1 = sample_gaussian_corpus(&a, &a, 20, 30, 5).unwrap();
        let c2 = sample_gaussian_corpus(&a, &a, 20, 30, 5).unwrap();
        assert_eq!(c1, c2);
        assert_ne!(c1, sample_gaussian_corpus(&a, &a, 20, 30, 6).unwrap());
    }

    #[test]
    fn density_matches_closed_form() {
        let s = GaussianSpec::centered(1, 1.0).unwrap();
        assert!((s.density(&[0.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }
}
