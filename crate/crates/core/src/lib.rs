//! Full-state reconstruction from moving point sensors with shallow
//! recurrent decoder networks.
//!
//! The pipeline: generate (or load) a snapshot matrix, choose sensor
//! trajectories, cut lagged measurement windows, train an LSTM + decoder
//! with ADAM, and evaluate reconstructions in physical units.

pub mod baselines;
pub mod container;
pub mod error;
pub mod eval;
pub mod fieldgen;
pub mod grid;
pub mod linalg;
pub mod nncore;
pub mod optimizer;
pub mod pipeline;
pub mod seed;
pub mod sensing;

pub use error::{Result, ShredError};
