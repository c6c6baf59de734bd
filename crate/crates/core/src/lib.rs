//! Bayesian network-response regression.
//!
//! A population of binary undirected networks, each paired with a scalar
//! trait, is modelled through subject-specific latent coordinates whose
//! means move smoothly with the trait. Every edge probability is
//! `logistic(Z_l + <Y_v, Y_u>)`, the coordinate means are combinations of
//! Gaussian-process dictionary functions, and the whole posterior is
//! explored by a Polya-Gamma augmented Gibbs sampler.
//!
//! The crate is `no_std` (with `alloc`). File formats, the command line
//! and checkpointing live in the `netresp` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod baseline;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod kernel;
pub mod linalg;
pub mod math;
pub mod model;
pub mod network;
pub mod pg;
pub mod rng;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use network::{
    index_to_pair, pair_to_index, AdjacencyMatrix, BlockPartition, EdgeState, EdgeVector, NetworkDataset,
};
pub use rng::RngStream;
