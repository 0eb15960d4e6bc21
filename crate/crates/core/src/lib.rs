//! Facies classification from well logs with a one-dimensional inception
//! convolutional network, implemented from scratch.
//!
//! Pipeline: [`welldata`] parses and windows the logs, [`network`] defines
//! the model and its checkpoints, [`training`] fits it with momentum SGD,
//! [`evaluation`] scores predictions, [`synth`] makes labeled test wells and
//! [`cli`] wires everything to the `faciesnet` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod gradcheck;
pub mod network;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod training;
pub mod welldata;

pub use error::{Error, Result};
