//! Shape-model evaluation: PCA statistics and mesh distances.

mod distance;
mod pca;

pub use distance::{closest_point_on_triangle, surface_to_surface_distance, SurfaceDistance, TriangleIndex};
pub use pca::{compactness, generalization, mean_particle_distance, pca_fit, specificity, ShapeModel};
