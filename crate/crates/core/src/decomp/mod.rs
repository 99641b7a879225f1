//! Orthogonal decomposition `Z = Z_s ⊕ Z_I ⊕ Z_T` of the shared space into a
//! shared subspace and two modality-specific subspaces.

mod allocate;
mod checks;
mod decomposition;
mod loss;
mod optimize;
mod planted;
mod volume;

pub use allocate::{allocate_dimensions, DimensionPlan};
pub use checks::{
    check_dim_constraint, check_projector_laws, misalignment_vs_ds_sweep, perturb_stability_check, SweepRow,
};
pub use decomposition::{
    load_decomposition, save_decomposition, Bases, ComponentSplit, Decomposition, Subspace, ORTHO_TOL,
};
pub use loss::{
    loss_align, loss_orth, loss_specificity, loss_with_gradient, total_loss, LossBreakdown, LossData, LossWeights,
    SpecificityMode,
};
pub use optimize::{gradient_check, optimize, write_trace_csv, OptimizeConfig, OptimizeOutcome, TraceRow};
pub use planted::{planted_model, PlantedConfig, PlantedModel};
pub use volume::{alignment_volume_mc, VolumeDensity, VolumeEstimate};
