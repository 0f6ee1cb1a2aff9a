//! Library side of the `qtt` command-line harness: the named-function
//! registry and the deterministic experiment runner.

pub mod experiments;
pub mod registry;

pub use experiments::{run_experiment, ExperimentConfig, EXPERIMENT_NAMES};
pub use registry::{lookup, FnParams, RegistryEntry, FUNCTION_NAMES};
