//! Experiment harness: configs, datasets, sweeps and result files.

pub mod config;
pub mod data;
pub mod experiment;
pub mod output;
pub mod rng;
pub mod synth;

pub use config::{DatasetSpec, ExperimentConfig, SyntheticSpec};
pub use experiment::{load_dataset, run_learning_curve, run_rank_sweep, ResultRow};
pub use output::emit_results;
pub use synth::generate_synthetic;
