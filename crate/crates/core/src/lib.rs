//! Ionization of a delta-well bound state by a periodic forcing
//! `alpha sin(omega t)`: resolvent lattice, continued fractions, pole data,
//! transseries and a direct Volterra solver.

pub mod asympt;
pub mod contfrac;
pub mod error;
pub mod lattice;
pub mod quad;
pub mod specfun;
pub mod spectral;
pub mod transseries;
pub mod volterra;

pub use error::{Error, Result};
pub use specfun::{BranchSide, ModelParams};
