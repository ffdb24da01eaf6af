//! Self-organizing maps whose neurons see only a restricted receptive field
//! of the input, applied to joint-angle data from humanoid self-touch
//! postures.
//!
//! - [`lattice`]: output grid geometry and the neighborhood kernel.
//! - [`som`]: the classic fully connected map.
//! - [`mrf`]: receptive-field masks and masked training.
//! - [`datagen`]: posture sampler, dataset CSV files and normalization.
//! - [`analysis`]: heatmaps, neuron-distance map and encoding report.
//! - [`cli`]: the `mrf-som` command line.

pub mod analysis;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod io;
pub mod json;
pub mod lattice;
pub mod mrf;
pub mod numfmt;
pub mod som;

pub use error::{Error, Result};
