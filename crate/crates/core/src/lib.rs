//! Wavelet tight-frame image restoration with a discrete-to-continuum
//! numerical laboratory.
//!
//! The crate provides
//! - tensor-product B-spline tight-frame filter banks with verified
//!   filter identities ([`framelet`]),
//! - undecimated multi-level frame transforms with exact reconstruction,
//! - degradation operators (blur, inpainting mask) with fast
//!   normal-equation solves ([`operators`]),
//! - a splitting solver for the general two-transform restoration model
//!   and its classical special cases ([`solver`]),
//! - sampling operators, weighted transforms and energy functionals that
//!   realize the discrete-to-continuum limit numerically
//!   ([`asymptotics`]),
//! - PGM image I/O, synthetic data and metrics ([`imageio`]),
//! - a command-line frontend ([`cli`]).

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod framelet;
pub mod image;
pub mod imageio;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
pub use image::Image;
