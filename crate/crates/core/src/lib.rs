//! Online bin packing with Harmonic-class algorithms.
//!
//! This crate holds the pure algorithmic part of the project:
//!
//! * [`params`]: Super Harmonic parameter tables (the built-in SH+ instance
//!   and validation of user supplied ones) and item classification.
//! * [`harmonic1d`]: the Harmonic(k) online packer and its weighting function.
//! * [`superharmonic`]: the Super Harmonic online packer with red/blue
//!   coloring and bin groups.
//! * [`weighting`]: the case-split weighting functions for Super Harmonic and
//!   the per-run bound checker.
//! * [`pack2d`]: the slice-based 2D algorithms H×B / B×H, their weights and
//!   geometric validation.
//! * [`boundcert`]: the exact pattern maximizer and the competitive ratio
//!   certificate for H⊗SH+.
//!
//! All arithmetic that decides placements or bounds is exact. The crate is
//! `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod boundcert;
mod error;
pub mod harmonic1d;
pub mod pack2d;
pub mod params;
pub mod rational;
pub mod superharmonic;
pub mod weighting;

pub use error::{Error, Result};
pub use rational::{Rational, Q};
