//! Command-line orchestration for the risk-forest pipeline: configuration,
//! synthetic data, pipeline runs, ablations and run manifests.

pub mod ablation;
pub mod bundle;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod synth;

pub use ablation::{run_ablation, AblationRow, AblationTable};
pub use bundle::ModelBundle;
pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use manifest::Manifest;
pub use pipeline::{run_pipeline, PipelineOutput};
pub use synth::{generate_synthetic, SyntheticSpec};
