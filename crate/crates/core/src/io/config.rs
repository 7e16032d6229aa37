//! Run configuration files.
//!
//! A run is described by a small TOML document:
//!
//! ```toml
//! [data]
//! grid_dir = "data"          # every *.sdfgrid in the directory, sorted by name
//! grids = ["extra.sdfgrid"]  # appended after grid_dir
//! output = "out"
//! checkpoint_every = 0       # write particle files every N epochs, 0 disables
//!
//! [optimizer]
//! particles = 64
//! epochs = 100
//! pre_opt_epochs = 20
//! learning_rate = 1.0
//! seed = 7
//! kernel = "biharmonic"      # or "triharmonic", "thin-plate"
//! ridge = 0.0
//! reference_shape = 0
//! max_step_voxels = 2.0
//!
//! [optimizer.loss]
//! alpha = 0.01
//! beta = 1.0
//! gamma = 0.01
//! zeta = 0.01
//! error_pull = 1.0
//! batch_size = 8
//! band_samples = 10000
//! # band_half_width = 0.05
//! # covariance_floor = 1e-6
//!
//! [metrics]
//! max_modes = 10
//! specificity_samples = 1000
//! resolution = 64
//! seed = 0
//! ```
//!
//! Every key except `data.output` has a default. Relative paths are resolved
//! against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::OptimizerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grids: Vec<PathBuf>,
    pub output: PathBuf,
    #[serde(default)]
    pub checkpoint_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    /// Largest mode count reported; capped at `I - 1`.
    pub max_modes: usize,
    pub specificity_samples: usize,
    /// Marching-cubes lattice samples per axis.
    pub resolution: usize,
    pub seed: u64,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            max_modes: 10,
            specificity_samples: 1000,
            resolution: 64,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub metrics: MetricOptions,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.message().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(e.to_string()))
    }

    /// Reads `path`, resolves relative paths against its directory and
    /// expands `grid_dir`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config = RunConfig::parse(&text).map_err(|e| match e {
            Error::Format(message) => Error::FormatAt {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        let base = std::path::absolute(path)
            .map_err(|e| Error::io(path, e))?
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        config.resolve(&base)
    }

    /// Makes every path absolute with respect to `base` and replaces
    /// `grid_dir` by the grid files it contains.
    pub fn resolve(mut self, base: &Path) -> Result<Self> {
        let join = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut grids = Vec::new();
        if let Some(dir) = self.data.grid_dir.take() {
            let dir = join(&dir);
            let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "sdfgrid"))
                .collect();
            found.sort();
            grids.extend(found);
        }
        grids.extend(self.data.grids.iter().map(|p| join(p)));
        self.data.grids = grids;
        self.data.output = join(&self.data.output);
        Ok(self)
    }

    /// Checks everything that can be checked before loading grids.
    pub fn validate(&self) -> Result<()> {
        if self.data.grids.is_empty() && self.data.grid_dir.is_none() {
            return Err(Error::invalid("config lists no grids"));
        }
        for g in &self.data.grids {
            if !g.is_file() {
                return Err(Error::invalid(format!("grid file {} does not exist", g.display())));
            }
        }
        if self.metrics.specificity_samples == 0 || self.metrics.resolution < 2 {
            return Err(Error::invalid(
                "metrics need at least one specificity sample and a resolution of 2",
            ));
        }
        self.optimizer.validate()
    }
}
