//! Sparse reconstruction algorithms.

pub mod baselines;
pub mod gamp;
pub mod turbo;

pub use baselines::{least_squares, sals_oracle, sp_baseline, stack_real, BaselineOutput};
pub use gamp::{bg_denoise, gamp_single, gamp_solve, ElementPrior, GampConfig, GampOutput, RealSystem};
pub use turbo::{
    em_turbo_gamp, em_update, structure_pass, AmplitudeModel, EmConfig, PosteriorStats, SolverOutput, SupportModel,
    TurboConfig, ViewMessages,
};
