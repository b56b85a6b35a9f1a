//! Incompressible flow on a staggered grid, advected with long-range
//! bi-directional flow maps of vorticity and reconstructed through a coupled
//! velocity-vorticity Poisson solve that respects solid walls.

pub mod dump;
pub mod flowmap;
pub mod grid;
pub mod poisson;
pub mod scenes;
pub mod simulation;
pub mod transport;

mod error;

pub use error::{Error, Result};
pub use grid::{Array3, CellField, DomainWalls, FaceField, GridDesc, Mat3, Vec3, VortField};
