//! Rested Markovian multi-armed bandits: finite reversible reward chains, the
//! sample-mean UCB index policy, seeded Monte Carlo regret simulation, and
//! numerical evaluation of the regret, occupation-time, and asymptotic
//! lower bounds that govern this model.
//!
//! The crate is organized around the lifecycle of an experiment:
//!
//! * [`chain`] — build and validate arms (irreducible, aperiodic, reversible
//!   chains with positive per-state rewards) and their derived quantities:
//!   stationary distribution, eigenvalue gap, mean reward.
//! * [`policy`] — the UCB index and its recursive sample-mean state.
//! * [`sim`] — the rested episode engine and Monte Carlo regret trajectories.
//! * [`analysis`] — closed-form bound evaluators plus the Monte Carlo
//!   validators that check them empirically.
//! * [`presets`] — the bundled S1/S2 instances.

pub mod analysis;
pub mod chain;
mod linalg;
pub mod policy;
pub mod presets;
pub mod sim;

pub use analysis::{
    beta_constant, gillman_empirical_check, gillman_tail, kl_rate, kl_rate_report,
    lower_bound_coefficient, min_exploration_constant, occupancy_deviation_check, regret_bound,
    AnalysisError, BoundReport, GillmanBound, GillmanValidation, KlRateReport,
    OccupancyDeviationReport, StartSpec, StoppingRule,
};
pub use chain::{
    eigenvalue_gap, make_arm, stationary_distribution, theta_arm, Arm, ChainError,
    ThetaFamilyPoint,
};
pub use policy::{best_arm, exploration_bonus, PolicyError, UcbState};
pub use presets::Preset;
pub use sim::{
    default_checkpoints, monte_carlo_regret, regret_decomposition, run_episode, run_episode_with,
    BanditInstance, EpisodeRecord, RegretDecomposition, RegretTrajectory, SimError, StreamSeed,
};
