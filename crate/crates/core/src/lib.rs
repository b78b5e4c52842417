//! Numerical laboratory for the identification problem of the attenuated X-ray
//! transform: forward and linearized operators, microlocal diagnostics, radial
//! null-space constructions and iterative reconstruction.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod microlocal;
pub mod radial;
pub mod recon;
pub mod xray;

pub use error::{Error, Result};
pub use geometry::{Direction, Disk, Point};
pub use grid::{Field, GridSpec, ScalarField2D, Sinogram, SinogramGeometry};
