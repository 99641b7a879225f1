//! Embedding ring polynomials into the shared real space `R^d`.

mod corpus;
mod gaussian;
mod map;

pub use corpus::{load_corpus, save_corpus, EmbeddedCorpus, LabeledVector, Modality};
pub use gaussian::{sample_gaussian_corpus, sample_isotropic, GaussianSpec};
pub(crate) use gaussian::check_same_dim as gaussian_check_same_dim;
pub use map::{build_map, embed_poly, EmbeddingMap};
