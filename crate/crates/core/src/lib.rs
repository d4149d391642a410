//! Forging self-labeled EEG pre-training sets and benchmarking them on a
//! small multi-channel vision transformer.

pub mod alterations;
pub mod config;
pub mod cwt;
pub mod dataset;
pub mod error;
pub mod io;
pub mod mvit;
pub mod pipeline;
pub mod protocol;
pub mod seed;
pub mod signal;
pub mod stats;
pub mod synthgen;

pub use error::{Error, Result};
