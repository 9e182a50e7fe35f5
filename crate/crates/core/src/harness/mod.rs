//! Experiment plumbing: run configuration, weight archives, image output
//! and the pipeline phases driven by the CLI.

pub mod archive;
pub mod config;
pub mod pipeline;
pub mod ppm;

pub use archive::WeightArchive;
pub use config::RunConfig;
pub use pipeline::{AgentKind, Dataset, Visual};
