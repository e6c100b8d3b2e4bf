//! Active-learning structural reliability: probabilistic input models,
//! Kriging / PCE / PC-Kriging surrogates, reliability solvers, learning
//! functions, stopping criteria and the enrichment loop, plus the benchmark
//! problem library and ranking metrics.
//!
//! The crate is `no_std` with `alloc`; the `std` feature only adds
//! `std::error::Error` support through `thiserror`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod alr;
pub mod design;
pub mod error;
pub mod input;
pub mod kriging;
pub mod learning;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod pce;
pub mod pck;
pub mod problems;
pub mod reliability;
pub mod rng;
pub mod special;
pub mod stopping;
pub mod strategy;
pub mod surrogate;
pub mod truss;

pub use error::{Error, Result};
