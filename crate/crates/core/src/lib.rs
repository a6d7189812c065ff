//! Simulation and estimation of dispersal densities from parent and
//! offspring point clouds, across dispersal scales from microscopic to
//! macroscopic.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod iid;
pub mod io;
pub mod kernels;
pub mod model;
pub mod quad;
pub mod seed;
pub mod simulation;
pub mod spectral;

pub use error::{Error, Result};
