use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::ring_poly::RingPoly;
use crate::rng::SeedTree;

/// A seeded linear map from normalized coefficient vectors to `R^out_dim`.
///
/// The weights are a pure function of `(seed, input_len, out_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap {
    seed: u64,
    modulus: u64,
    weights: DMatrix<f64>,
}

impl EmbeddingMap {
    /// Wraps explicit weights (`out_dim x input_len`).
    pub fn from_weights(seed: u64, modulus: u64, weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::domain("embedding weights must be non-empty"));
        }
        if modulus < 2 {
            return Err(Error::domain(format!("modulus must be >= 2, got {modulus}")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("embedding weights must be finite"));
        }
        Ok(Self {
            seed,
            modulus,
            weights,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn input_len(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }
}

/// Samples weights i.i.d. uniform in `[-1/sqrt(input_len), 1/sqrt(input_len)]`.
pub fn build_map(seed: u64, input_len: usize, out_dim: usize, modulus: u64) -> Result<EmbeddingMap> {
    if input_len == 0 || out_dim == 0 {
        return Err(Error::domain(format!(
            "embedding map needs input_len >= 1 and out_dim >= 1, got {input_len} and {out_dim}"
        )));
    }
    let bound = 1.0 / (input_len as f64).sqrt();
    let mut rng = SeedTree::new(seed).stream("embedding-map");
    // column-major fill keeps the draw order fixed for a given shape
    let weights = DMatrix::from_fn(out_dim, input_len, |_, _| rng.random_range(-bound..=bound));
    EmbeddingMap::from_weights(seed, modulus, weights)
}

/// Zero-pads `p` to the map's input width, divides by `modulus - 1` and applies the weights.
pub fn embed_poly(map: &EmbeddingMap, p: &RingPoly) -> Result<Vec<f64>> {
    if p.modulus() != map.modulus {
        return Err(Error::domain(format!(
            "polynomial is over Z_{} but the map expects Z_{}",
            p.modulus(),
            map.modulus
        )));
    }
    if p.len() > map.input_len() {
        return Err(Error::domain(format!(
            "polynomial has {} coefficients, map accepts at most {}",
            p.len(),
            map.input_len()
        )));
    }
    let scale = (map.modulus - 1) as f64;
    let mut out = vec![0.0; map.out_dim()];
    for (k, &c) in p.coeffs().iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x = c as f64 / scale;
        for (r, o) in out.iter_mut().enumerate() {
            *o += map.weights[(r, k)] * x;
        }
    }
    Ok(out)
}
