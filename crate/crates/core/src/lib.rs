//! Closest point method on narrow-band Cartesian grids for surface PDEs with
//! Neumann and Robin boundary conditions.

pub mod band;
pub mod config;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod manufactured;
pub mod operators;
pub mod reaction_diffusion;
pub mod sparse;
pub mod steklov;

pub use error::{Error, Result};
