//! Statistical shape models from signed-distance grids.
//!
//! Each shape of a cohort carries the same number of control points. The
//! points and their surface normals define an RBF implicit surface per shape,
//! and gradient descent moves the points under four losses: surface
//! adherence, error-driven narrow-band sampling, a Gaussian entropy
//! (eigenshape) term and a cross-shape correspondence term. The finished
//! point distribution model is evaluated with PCA compactness, specificity,
//! generalization and two-way surface distances.

pub mod cli;
pub mod error;
pub mod io;
pub mod losses;
pub mod mesh;
pub mod metrics;
pub mod optimizer;
pub mod rbf;
pub mod sdf_grid;

pub use error::{Error, Result};
pub use mesh::TriMesh;
pub use rbf::{Kernel, ParticleSystem, RbfSurface};
pub use sdf_grid::{NarrowBand, SdfGrid};
