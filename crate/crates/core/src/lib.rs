//! Block-diagonal operator preconditioners for interface-coupled
//! saddle-point problems (Stokes, Darcy, elasticity-type and Poisson
//! couplings), with the fractional interface operators they need.

pub mod error;
pub mod fem;
pub mod mesh;

pub use error::{Error, Result};
pub mod interface;
pub mod solve;
pub mod systems;
pub mod experiment;
