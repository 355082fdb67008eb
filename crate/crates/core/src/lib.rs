//! Two-word listener-only Naming Game on random geometric graphs over the
//! unit torus.
//!
//! * [`geometry`] builds the graphs.
//! * [`microsim`] runs the agent-level speaker/listener dynamics.
//! * [`meanfield`] integrates the coarse-grained concentration fields.
//! * [`analysis`] measures correlations, domain boundaries and fits.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod meanfield;
pub mod microsim;
pub mod rng;

pub use error::{Error, Result};
