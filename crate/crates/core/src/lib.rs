//! Pseudo-spectral solver for the reduced morning-glory channel model
//! `u_t + u u_x - Tu u_y = mu Lap u + alpha u - beta Tu + F` on
//! `[0, 2 pi) x (0, 1)`, periodic in `x`, Dirichlet in `y`, together with a
//! harness that checks the model's a-priori estimates along computed
//! trajectories.

pub mod cli;
pub mod config;
pub mod csv;
pub mod diagnostics;
pub mod error;
pub mod fd;
pub mod field;
pub mod galerkin;
pub mod grid;
pub mod integrator;
pub mod mms;
pub mod operators;
pub mod presets;
pub mod report;
pub mod snapshot;
pub mod theorems;
pub mod transform;

pub use error::{Error, Result};
pub use field::{PhysicalField, SpectralField};
pub use grid::Grid;
