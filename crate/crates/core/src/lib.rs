//! Learning dynamics on history-dependent binary-action games, the monotone
//! coupling between a history-dependent game and an aligned static reference,
//! exact oracles for the resulting dominance results, and two case studies.

pub mod cases;
pub mod coupling;
pub mod equilibrium;
pub mod error;
pub mod experiment;
pub mod game;
pub mod graph;
pub mod learning;
pub mod profile;

pub use error::{Error, Result};
pub use game::{
    check_aligned, check_aligned_sampled, AlignedGamePair, AlignmentVerdict, AlignmentWitness,
    DynamicGame, EnvView, FnGame, Frozen, StaticGame, TableGame,
};
pub use graph::Graph;
pub use learning::{
    async_step_distribution, exact_path_distribution, exact_path_probability, individual_step,
    sample_step, simulate_path, simulate_with, IndividualRule, InertialRule, InitialDistribution,
    LearningRule, PathDistribution, TransitionDistribution,
};
pub use profile::{
    deviator, leq_path, leq_profile, mirror_b, partition_sets, unilateral_neighbors, ActionProfile,
    DeviatorId, History, PartitionSets,
};
