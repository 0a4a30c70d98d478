//! Simulation of an online learner that reconstructs a hidden database
//! vector from one-bit threshold answers to noisy linear queries.
//!
//! The learner ([`learner::OnlineBisection`]) keeps an axis-aligned box of
//! coefficients over an orthonormal basis of the query space. For each query
//! it answers with the box center; when the query is nearly parallel to a
//! basis direction it also spends the query's single oracle call on the
//! midpoint threshold and tallies the bit. Once every direction has enough
//! bits, each side shrinks by a factor 3/4 toward the side the votes favour.
//!
//! [`harness`] drives whole experiments from a config file; [`verify`] holds
//! independent checkers for the supporting geometry and tail bounds.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod geometry;
pub mod harness;
pub mod hypercube;
pub mod learner;
pub mod noise;
pub mod protocol;
pub mod querygen;
pub mod verify;

pub use error::{Error, Result};
