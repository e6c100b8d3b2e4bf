//! Benchmark campaigns for active-learning reliability strategies: problem
//! registry and truss geometry files, seeded campaign execution, and CSV,
//! ranking and plot-data exports.

pub mod campaign;
pub mod config;
pub mod error;
pub mod export;
pub mod geometry;
pub mod registry;

pub use error::{BenchError, Result};
