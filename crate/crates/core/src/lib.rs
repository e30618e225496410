//! Class-incremental learning with exemplar rehearsal.
//!
//! New classes arrive in tasks. After each task the learner herds a fixed
//! number of exemplars per class, later tasks rehearse them under a
//! distillation loss against a pre-task snapshot, and inference assigns the
//! class with the nearest exemplar feature mean. One- and two-stream
//! (per-modality) feature extractors are supported, and every run produces
//! an accuracy matrix with backward-transfer and mean-accuracy summaries.

pub mod bench;
pub mod classify;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod exemplar;
mod io;
pub mod model;
pub mod nn;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
pub use io::{sha256_hex, write_atomic};
