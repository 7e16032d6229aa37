//! RBF implicit surfaces built from control points and their normals.

mod kernel;
pub mod marching_cubes;
mod particles;
mod surface;

pub use kernel::Kernel;
pub use particles::{build_dipoles, DipoleSet, ParticleSystem, DUPLICATE_TOLERANCE, MIN_PARTICLES};
pub use surface::{RbfSurface, MAX_CONTROL_POINTS, MAX_SYSTEM_SIZE};
