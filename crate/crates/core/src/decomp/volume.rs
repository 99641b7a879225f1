use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf;

use crate::embed::GaussianSpec;
use crate::error::{Error, Result};
use crate::rng::SeedTree;

const MAX_DIM: usize = 8;

/// An isotropic Gaussian on shared coordinates, optionally truncated to the
/// box `|z_k - mean_k| <= half_width` on every axis and renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeDensity {
    pub spec: GaussianSpec,
    pub half_width: Option<f64>,
}

impl VolumeDensity {
    pub fn gaussian(spec: GaussianSpec) -> Self {
        Self { spec, half_width: None }
    }

    pub fn truncated(spec: GaussianSpec, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::domain(format!("half width must be positive, got {half_width}")));
        }
        Ok(Self {
            spec,
            half_width: Some(half_width),
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn mass_in_box(&self, h: f64) -> f64 {
        erf(h / (self.spec.std_dev() * std::f64::consts::SQRT_2)).powi(self.dim() as i32)
    }

    pub fn density(&self, z: &[f64]) -> f64 {
        match self.half_width {
            None => self.spec.density(z),
            Some(h) => {
                if z.iter().zip(self.spec.mean()).any(|(x, m)| (x - m).abs() > h) {
                    0.0
                } else {
                    self.spec.density(z) / self.mass_in_box(h)
                }
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let sd = self.spec.std_dev();
        match self.half_width {
            None => self
                .spec
                .mean()
                .iter()
                .map(|m| m + sd * Distribution::<f64>::sample(&StandardNormal, rng))
                .collect(),
            Some(h) => {
                // inverse CDF restricted to [-h/sd, h/sd] on each axis
                let unit = Normal::new(0.0, 1.0).expect("standard normal");
                let lo = unit.cdf(-h / sd);
                let hi = unit.cdf(h / sd);
                self.spec
                    .mean()
                    .iter()
                    .map(|m| {
                        let u = lo + (hi - lo) * rng.random::<f64>();
                        let x = (sd * unit.inverse_cdf(u)).clamp(-h, h);
                        m + x
                    })
                    .collect()
            }
        }
    }
}

/// Estimates of `∫ μ_f μ_g` and `∫ min(μ_f, μ_g)` with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub product: f64,
    pub product_se: f64,
    pub bound: f64,
    pub bound_se: f64,
    pub n_samples: usize,
}

impl VolumeEstimate {
    /// `sqrt(product_se² + bound_se²)`.
    pub fn combined_se(&self) -> f64 {
        self.product_se.hypot(self.bound_se)
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Importance sampling from the mixture `q = (μ_f + μ_g) / 2`, which covers
/// the support of both integrands.
pub fn alignment_volume_mc(f: &VolumeDensity, g: &VolumeDensity, n_samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if f.dim() != g.dim() {
        return Err(Error::domain(format!(
            "density dimensions differ: {} vs {}",
            f.dim(),
            g.dim()
        )));
    }
    if f.dim() == 0 || f.dim() > MAX_DIM {
        return Err(Error::domain(format!(
            "alignment volume supports 1..={MAX_DIM} shared dimensions, got {}",
            f.dim()
        )));
    }
    if n_samples == 0 {
        return Err(Error::domain("n_samples must be >= 1"));
    }
    let mut rng = SeedTree::new(seed).stream("alignment-volume");
    let mut prod = Vec::with_capacity(n_samples);
    let mut min = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let z = if rng.random::<bool>() { f.sample(&mut rng) } else { g.sample(&mut rng) };
        let (pf, pg) = (f.density(&z), g.density(&z));
        let q = 0.5 * (pf + pg);
        prod.push(pf * pg / q);
        min.push(pf.min(pg) / q);
    }
    let (product, product_se) = mean_and_se(&prod);
    let (bound, bound_se) = mean_and_se(&min);
    Ok(VolumeEstimate {
        product,
        product_se,
        bound,
        bound_se,
        n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(mean: f64, var: f64) -> VolumeDensity {
        VolumeDensity::gaussian(GaussianSpec::new(vec![mean], var).unwrap())
    }

    #[test]
    fn equal_densities_bound_is_one() {
        let e = alignment_volume_mc(&gauss(0.0, 1.0), &gauss(0.0, 1.0), 10_000, 1).unwrap();
        assert!((e.bound - 1.0).abs() < 1e-12);
        // ∫ φ² = 1 / (2√π)
        let exact = 1.0 / (2.0 * std::f64::consts::PI.sqrt());
        assert!((e.product - exact).abs() < 4.0 * e.product_se.max(1e-12), "{}", e.product);
    }

    #[test]
    fn separated_means_match_normal_cdf() {
        let e = alignment_volume_mc(&gauss(0.0, 1.0), &gauss(2.0, 1.0), 200_000, 2).unwrap();
        let oracle = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-1.0);
        assert!((oracle - 0.3173).abs() < 1e-4);
        assert!((e.bound - oracle).abs() < 4.0 * e.bound_se, "{} ± {}", e.bound, e.bound_se);
        // ∫ φ(z) φ(z-2) = exp(-1) / (2√π)
        let exact = (-1.0f64).exp() / (2.0 * std::f64::consts::PI.sqrt());
        assert!((e.product - exact).abs() < 4.0 * e.product_se);
    }

    #[test]
    fn disjoint_truncations_give_zero() {
        let f = VolumeDensity::truncated(GaussianSpec::new(vec![0.0, 0.0], 1.0).unwrap(), 1.0).unwrap();
        let g = VolumeDensity::truncated(GaussianSpec::new(vec![5.0, 0.0], 1.0).unwrap(), 1.0).unwrap();
        let e = alignment_volume_mc(&f, &g, 5_000, 3).unwrap();
        assert_eq!(e.product, 0.0);
        assert_eq!(e.bound, 0.0);
    }

    #[test]
    fn truncated_density_integrates_to_one() {
        let f = VolumeDensity::truncated(GaussianSpec::new(vec![0.0], 2.0).unwrap(), 0.7).unwrap();
        let n = 20_000;
        let h = 1.4 / n as f64;
        let total: f64 = (0..n).map(|k| f.density(&[-0.7 + (k as f64 + 0.5) * h]) * h).sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
        let mut rng = SeedTree::new(4).stream("t");
        assert!((0..1000).all(|_| f.sample(&mut rng)[0].abs() <= 0.7));
    }

    #[test]
    fn rejects_bad_dims() {
        let a = gauss(0.0, 1.0);
        let b = VolumeDensity::gaussian(GaussianSpec::centered(2, 1.0).unwrap());
        assert!(alignment_volume_mc(&a, &b, 10, 1).is_err());
        let big = VolumeDensity::gaussian(GaussianSpec::centered(9, 1.0).unwrap());
        assert!(alignment_volume_mc(&big, &big, 10, 1).is_err());
        assert!(alignment_volume_mc(&a, &a, 0, 1).is_err());
    }

    #[test]
    fn product_below_bound_on_random_configs() {
        let mut rng = SeedTree::new(5).stream("configs");
        for k in 0..20 {
            let f = gauss(rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0));
            let g = gauss(rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0));
            let e = alignment_volume_mc(&f, &g, 20_000, k).unwrap();
            assert!(e.product <= e.bound + 4.0 * e.combined_se(), "config {k}: {e:?}");
        }
    }
}
