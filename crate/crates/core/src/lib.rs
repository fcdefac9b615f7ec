//! Top-K selection and the Domination problem from non-adaptive noisy
//! pairwise comparisons under strong stochastic transitivity.
//!
//! The crate provides instance types and generators, seeded bit-packed
//! samplers, the Domination and Top-K solvers, information-theoretic lower
//! bounds, exact small-instance oracles and a Monte Carlo harness.

pub mod cli;
pub mod domination;
pub mod error;
pub mod generators;
pub mod harness;
pub mod info;
pub mod io;
pub mod model;
pub mod oracles;
pub mod rng;
pub mod samples;
pub mod topk;

pub use error::{Error, Result};
