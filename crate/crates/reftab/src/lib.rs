//! Experiments, rule-table IO and the command-line front end for
//! [`reftab_core`].

pub mod cli;
pub mod experiments;
pub mod fields;
pub mod output;
pub mod rng;
pub mod tables;

pub use cli::{execute, AppError, Cli, Experiment, ExperimentConfig};
pub use fields::NamedField;
pub use output::Table;
