//! Numerical solvers for a discrete-time mean field game with a resetting
//! action: finite-horizon and stationary equilibria, threshold policies,
//! invariant laws, Monte Carlo cross-checks and finite-population games.
//!
//! The grid solvers are generic over the scalar type ([`num::Real`], i.e.
//! `f32` or `f64`); the Monte Carlo modules work in `f64`. Concrete aliases
//! for both precisions are exported at the crate root.

pub mod aux_mdp;
pub mod dp;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod mean_field;
pub mod measures;
pub mod model;
pub mod nplayer;
pub mod num;
pub mod regen;
pub mod report;
pub mod roots;
pub mod stationary;

pub use aux_mdp::{AuxProblem, RBounds};
pub use dp::{evaluate_policy_cost, solve_dp, PolicySchedule, ThresholdDescriptor, ValueTable};
pub use error::{Error, Result};
pub use grid::StateGrid;
pub use kernel::{Kernel, XiSpec};
pub use mean_field::{phi_map, solve_fixed_point, FixedPointOptions, MeanFieldPath, MeanFieldSolution};
pub use measures::{push_a0, push_threshold, tv_distance, GridMeasure};
pub use model::{Cost, CostTable, Curve, ModelParams};
pub use nplayer::{epsilon_nash_gap, simulate_game, EpsilonGap, NPlayerRun};
pub use num::Real;
pub use regen::{long_run_mean_by_path, regen_estimate, PathAverage, RegenEstimate};
pub use stationary::{
    ergodicity_report, solve_stationary_equilibrium, stationary_distribution, threshold_of_z, uniqueness_probe,
    z_of_theta, ErgodicityReport, StationaryOptions, StationarySolution, UniquenessReport,
};

pub type KernelF64 = Kernel<f64>;
pub type KernelF32 = Kernel<f32>;
pub type StateGridF64 = StateGrid<f64>;
pub type StateGridF32 = StateGrid<f32>;
pub type GridMeasureF64 = GridMeasure<f64>;
pub type GridMeasureF32 = GridMeasure<f32>;
pub type ModelParamsF64 = ModelParams<f64>;
pub type ModelParamsF32 = ModelParams<f32>;
pub type XiSpecF64 = XiSpec<f64>;
pub type XiSpecF32 = XiSpec<f32>;
pub type ThresholdF64 = ThresholdDescriptor<f64>;
pub type ThresholdF32 = ThresholdDescriptor<f32>;
pub type PolicyScheduleF64 = PolicySchedule<f64>;
pub type PolicyScheduleF32 = PolicySchedule<f32>;
pub type MeanFieldSolutionF64 = MeanFieldSolution<f64>;
pub type MeanFieldSolutionF32 = MeanFieldSolution<f32>;
pub type StationarySolutionF64 = StationarySolution<f64>;
pub type StationarySolutionF32 = StationarySolution<f32>;
