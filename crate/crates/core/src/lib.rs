//! XCSF learning classifier system for online autoencoding.
//!
//! Each classifier pairs a neural condition, which decides the region of
//! input space it covers, with a neural autoencoder that reconstructs inputs
//! in that region. Networks grow, shrink and re-wire under self-adaptive
//! mutation while predictions are refined by gradient descent.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod neural;
pub mod xcsf;

pub use config::ExperimentConfig;
pub use data::{CutoutSpec, Dataset, ImageShape};
pub use error::{Error, Result};
pub use experiment::{Corruption, Experiment, ReconstructOptions, ReconstructionReport, RunManifest};
pub use metrics::Checkpoint;
pub use neural::{Activation, Layer, Network, NeuronGrowth};
pub use xcsf::{Classifier, Mode, Params, Population, Xcsf};
