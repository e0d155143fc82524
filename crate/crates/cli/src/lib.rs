//! Experiment harness for `crossmf-core`: configuration files, CSV records,
//! seeded ensembles and the named figure presets used by the command line.

pub mod config;
pub mod experiment;
pub mod figures;
pub mod io;

pub use experiment::{run_experiment, ExperimentSpec, MeanFieldSetup, Outcome, Summary};
pub use figures::{Arm, Figure};

/// Environment variable overriding the output directory.
pub const OUTPUT_DIR_ENV: &str = "CROSSMF_OUTPUT_DIR";
