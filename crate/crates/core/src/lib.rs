//! Exact divergence computation between discrete decomposable models.
//!
//! A decomposable model stores one probability table per maximal clique of a
//! chordal graph. This crate builds junction forests over such models,
//! calibrates them without divisions, and evaluates a family of
//! sum-of-products functionals that covers the whole alpha-beta divergence
//! family, with brute-force and Monte Carlo baselines for cross-checking.

pub mod baselines;
pub mod bayes;
pub mod chordal;
pub mod divergence;
pub mod error;
pub mod factor;
pub mod functional;
pub mod generate;
pub mod graph;
pub mod io;
pub mod jt;
pub mod model;
pub mod vars;

pub use error::{Error, Result};
