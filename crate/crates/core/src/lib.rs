//! Core algorithms for thresholded lexicographic multi-objective Q-learning
//! applied to longitudinal control among crossing pedestrians.
//!
//! Everything in this crate is deterministic given its inputs and seeds, and
//! the crate itself is `no_std` (with `alloc`); file formats, the CLI and any
//! other IO live in the companion `lexi-morl` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod action;
pub mod envsim;
pub mod eval;
pub mod geom;
mod math;
pub mod observe;
pub mod qfunc;
pub mod rewards;
pub mod select;
pub mod train;

mod error;

pub use action::Action;
pub use error::{Error, Result};
