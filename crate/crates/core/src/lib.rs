//! Continuous-time worldline Monte Carlo and exact diagonalization for the
//! transverse-field Ising model
//!
//! ```text
//! H = −λ Σ_{x∼y} σ³_x σ³_y − δ Σ_x σ¹_x − ν Σ_x σ³_x
//! ```
//!
//! on the torus `(Z/side)^d`, with checks of infrared bounds, Gaussian
//! domination, flip-count domination and susceptibility differential
//! inequalities.

pub mod cli;
pub mod config;
pub mod ed;
pub mod error;
pub mod hfunctions;
pub mod lattice;
pub mod observables;
pub mod quad;
pub mod runner;
pub mod sampler;
pub mod stats;
pub mod verify;
pub mod worldlines;

pub use error::{Error, Result};
