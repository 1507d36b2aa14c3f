//! Monte Carlo model of aid-choice experiments.

pub mod agents;
pub mod config;
pub mod experiment;
pub mod monte_carlo;

pub use agents::{
    choice_probabilities, choose_aids, generate_counterbalanced_orderings, realize_estimate, sample_population,
    DecisionMaker, RealizeOptions,
};
pub use config::{
    AidEffect, AidEffectSpec, ArmSizes, ChoiceModelSpec, ExperimentConfig, PopulationSpec,
    DEFAULT_MULTIPLE_VIEW_PROBABILITIES,
};
pub use experiment::{experiment_effects, run_experiment, run_experiment_with_seed, SimulatedExperiment};
pub use monte_carlo::{monte_carlo_effects, EffectDistribution, MonteCarloEffects, Replication};
