//! Graph learning network: recurrent blocks that jointly refine node
//! embeddings and a soft adjacency matrix, trained end to end with a small
//! reverse-mode autodiff engine.
//!
//! The crate also ships the synthetic dataset generators and the graph
//! statistics used to evaluate predicted structures.

pub mod autodiff;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod loss;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod train;

pub use error::{GlnError, Result};
pub use matrix::DenseMatrix;
pub use model::{GlnModel, ModelShape};
