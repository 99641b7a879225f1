//! Approximate fiber products and shared/private subspace decompositions for
//! image-text embeddings.
//!
//! * [`ring_poly`] encodes patches and token sequences as polynomials over `Z_m`.
//! * [`embed`] maps them into `R^d` and samples synthetic Gaussian corpora.
//! * [`fiber`] computes ε-joins between the two modalities, estimates their
//!   size, and checks monotonicity and noise tolerance.
//! * [`decomp`] learns and checks the orthogonal split `Z = Z_s ⊕ Z_I ⊕ Z_T`.

pub mod decomp;
pub mod embed;
pub mod error;
pub mod fiber;
pub mod linalg;
pub mod report;
pub mod ring_poly;
pub mod rng;

pub use error::{Error, Result};
