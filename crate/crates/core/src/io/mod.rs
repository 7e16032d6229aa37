//! On-disk formats: particle files, run configs, manifests and reports.

mod config;
mod particles;
mod report;

pub use config::{DataConfig, MetricOptions, RunConfig};
pub use particles::{format_particles, load_particles, parse_particles, save_particles};
pub use report::{
    parse_manifest, read_manifest, write_axes_manifest, write_history, write_manifest, ManifestEntry,
    MetricsReport, ReportRow, ShapeDistance,
};
