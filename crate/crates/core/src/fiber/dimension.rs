use std::collections::HashMap;

use nalgebra::DMatrix;

use super::join::JoinResult;
use crate::embed::LabeledVector;
use crate::error::{Error, Result};
use crate::linalg::covariance_spectrum;

pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.99;

/// Total variance below this counts as a point mass (dimension 0).
const POINT_MASS_VARIANCE: f64 = 1e-18;

/// Number of principal components of the matched-pair midpoints `(x + y) / 2`
/// needed to explain `variance_threshold` of their total variance.
pub fn estimate_join_dimension(
    join: &JoinResult,
    images: &[LabeledVector],
    texts: &[LabeledVector],
    variance_threshold: f64,
) -> Result<usize> {
    if join.is_empty() {
        return Err(Error::domain("cannot estimate the dimension of an empty join"));
    }
    if !(variance_threshold > 0.0 && variance_threshold < 1.0) {
        return Err(Error::domain(format!("variance threshold must lie in (0, 1), got {variance_threshold}")));
    }
    let image_by_id: HashMap<&str, &[f64]> = images.iter().map(|p| (p.id.as_str(), p.vector.as_slice())).collect();
    let text_by_id: HashMap<&str, &[f64]> = texts.iter().map(|p| (p.id.as_str(), p.vector.as_slice())).collect();
    let lookup = |map: &HashMap<&str, &'_ [f64]>, id: &str| -> Result<Vec<f64>> {
        map.get(id)
            .map(|v| v.to_vec())
            .ok_or_else(|| Error::domain(format!("join references unknown id {id:?}")))
    };
    let mut rows = Vec::with_capacity(join.len());
    for pair in &join.pairs {
        let x = lookup(&image_by_id, &pair.image_id)?;
        let y = lookup(&text_by_id, &pair.text_id)?;
        rows.push(x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>());
    }
    let dim = rows[0].len();
    let mids = DMatrix::from_fn(rows.len(), dim, |r, c| rows[r][c]);
    let spectrum = covariance_spectrum(&mids);
    let total: f64 = spectrum.iter().sum();
    if total < POINT_MASS_VARIANCE {
        return Ok(0);
    }
    let mut acc = 0.0;
    for (k, ev) in spectrum.iter().enumerate() {
        acc += ev;
        if acc >= variance_threshold * total {
            return Ok(k + 1);
        }
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{join_bruteforce, JoinConfig};
    use crate::rng::SeedTree;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn lv(id: String, v: Vec<f64>) -> LabeledVector {
        LabeledVector::new(id, v)
    }

    #[test]
    fn point_mass_is_zero_dimensional() {
        let xs = vec![lv("x0".into(), vec![1.0, 2.0]), lv("x1".into(), vec![1.0, 2.0])];
        let ys = vec![lv("y0".into(), vec![1.0, 2.0])];
        let j = join_bruteforce(&xs, &ys, &JoinConfig::new(0.1).unwrap()).unwrap();
        assert_eq!(estimate_join_dimension(&j, &xs, &ys, 0.99).unwrap(), 0);
    }

    #[test]
    fn line_in_r3_is_one_dimensional() {
        let dir = [1.0, -2.0, 0.5];
        let xs: Vec<LabeledVector> = (0..30).map(|k| lv(format!("x{k}"), dir.iter().map(|d| d * k as f64).collect())).collect();
        let ys: Vec<LabeledVector> =
            (0..30).map(|k| lv(format!("y{k}"), dir.iter().map(|d| d * (k as f64 + 0.01)).collect())).collect();
        let j = join_bruteforce(&xs, &ys, &JoinConfig::new(0.1).unwrap()).unwrap();
        assert_eq!(j.len(), 30);
        assert_eq!(estimate_join_dimension(&j, &xs, &ys, 0.99).unwrap(), 1);
    }

    #[test]
    fn isotropic_cloud_is_full_dimensional() {
        let mut rng = SeedTree::new(4).stream("iso");
        let d = 4;
        let xs: Vec<LabeledVector> = (0..2000)
            .map(|k| lv(format!("x{k}"), (0..d).map(|_| rng.sample(StandardNormal)).collect()))
            .collect();
        let ys: Vec<LabeledVector> = xs.iter().map(|p| lv(p.id.replace('x', "y"), p.vector.clone())).collect();
        let j = join_bruteforce(&xs, &ys, &JoinConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(j.len(), 2000);
        assert_eq!(estimate_join_dimension(&j, &xs, &ys, 0.99).unwrap(), d);
    }

    #[test]
    fn empty_join_rejected() {
        let xs = vec![lv("x".into(), vec![0.0])];
        let ys = vec![lv("y".into(), vec![5.0])];
        let j = join_bruteforce(&xs, &ys, &JoinConfig::new(0.1).unwrap()).unwrap();
        assert!(estimate_join_dimension(&j, &xs, &ys, 0.99).is_err());
    }
}
