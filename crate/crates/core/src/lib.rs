//! Constructive KAM for fibered holomorphic maps over irrational rotations.
//!
//! The crate is layered bottom-up: [`arithmetic`] (continued fractions and
//! worst divisors), [`schedule`] (convergence-control sequences), [`strip`]
//! (finite Fourier series on a strip), [`cohomology`], [`fibered`] (jets and
//! affine conjugation) and [`engine`] (the staged Newton scheme).

pub mod arithmetic;
pub mod cohomology;
pub mod engine;
pub mod fibered;
pub mod par;
pub mod schedule;
pub mod strip;

mod error;

pub use error::{Error, Result};
