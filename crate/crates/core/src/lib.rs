//! Monte Carlo laboratory for single-user scheduling in cognitive
//! multiple-access uplinks under K-SCG (K smallest channel gains) feedback.
//!
//! Everything numeric is generic over [`Real`]; the aliases at the bottom fix
//! the scalar to `f64` (default) or `f32`.

// `!(x > 0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dual_solver;
pub mod error;
pub mod fading;
pub mod order_stats;
pub mod power_control;
pub mod real;
pub mod rng;
pub mod scaling_lab;
pub mod simulator;
pub mod special;
pub mod stats;

pub use dual_solver::{
    estimate_constraints, solve_duals, solve_on_batch, ChannelBatch, ConstraintEstimate, DualSolution, DualVariables,
    SolverOptions,
};
pub use error::{Error, Result};
pub use fading::{ClassCParams, Family, FadingModel};
pub use order_stats::{select_k_smallest, KscgSelection};
pub use power_control::{allocate, allocate_scenario, AllocationResult, Eligible};
pub use real::Real;
pub use scaling_lab::{fit_points, parameter_study, run_sweep, theory_curve, theory_slope, Link, Regressor, SweepResult};
pub use simulator::{
    db_to_linear, estimate, estimate_with_duals, estimate_with_options, interference_profile, point_seed, ChannelDraw,
    EstimateResult, Feedback, InterferenceProfile, KSchedule, Network, ScenarioConfig,
};
pub use stats::{LinearFit, MeanEstimate};

pub type Scenario = ScenarioConfig<f64>;
pub type Fading = FadingModel<f64>;
pub type Duals = DualVariables<f64>;
pub type Estimate = EstimateResult<f64>;
pub type Sweep = SweepResult<f64>;
pub type Options = SolverOptions<f64>;

pub type ScenarioF32 = ScenarioConfig<f32>;
pub type FadingF32 = FadingModel<f32>;
pub type DualsF32 = DualVariables<f32>;
pub type EstimateF32 = EstimateResult<f32>;
pub type SweepF32 = SweepResult<f32>;
pub type OptionsF32 = SolverOptions<f32>;
