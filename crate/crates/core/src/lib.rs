//! Random Cantor-type measures whose Fourier transforms lie in `L_p` while
//! their supports are null for the `2d/p`-dimensional Hausdorff measure,
//! built at finite depth, together with numerical checks of the estimates
//! behind the construction.
//!
//! Module map:
//! - [`tree`]: branching tree, weights, layers and side lengths.
//! - [`measure`]: random shifts, cube placement and the measure recurrence.
//! - [`selection`]: rejection sampling of a good realization.
//! - [`fourier`]: closed-form transforms and decay envelopes.
//! - [`quadrature`]: `L_p` integrals with certified tails, Monte Carlo.
//! - [`verify`]: the executable checks and the suite runner.
//! - [`config`], [`cli`], [`output`]: the command-line tool.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod envelope;
pub mod error;
pub mod fourier;
pub mod measure;
pub mod output;
pub mod quadrature;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
