//! ε-approximate fiber products between image and text embeddings.

mod dimension;
mod join;
mod size;
mod verify;

pub use dimension::{estimate_join_dimension, DEFAULT_VARIANCE_THRESHOLD};
pub use join::{
    empirical_size, join, join_bruteforce, join_grid, write_join_csv, JoinConfig, JoinEngine, JoinResult,
    MatchedPair, GRID_MAX_DIM,
};
pub use size::{closed_form_gaussian_size, estimate_size_mc, SizeEstimate};
pub use verify::{
    check_inclusion_claim, max_cross_distance, verify_convergence, verify_monotonicity, verify_noise_tolerance, NoiseSpec,
};
