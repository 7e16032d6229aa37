//! Command-line front end. Each subcommand is a plain function so that it
//! can be driven from tests without spawning a process.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::io::{self, ManifestEntry, MetricOptions, MetricsReport, ReportRow, RunConfig, ShapeDistance};
use crate::mesh::TriMesh;
use crate::metrics::{self, surface_to_surface_distance};
use crate::optimizer::{CohortState, Optimizer, FALLBACK_RIDGE};
use crate::rbf::marching_cubes::extract_fn;
use crate::rbf::{Kernel, ParticleSystem, RbfSurface};
use crate::sdf_grid::{make_ellipsoid_cohort, SdfGrid};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "RBFPDM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "rbfpdm", version, about = "Statistical shape models from signed-distance grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic ellipsoid cohort whose x semi-axis varies.
    GenData(GenDataArgs),
    /// Optimize correspondences for the cohort described by a config file.
    Optimize {
        config: PathBuf,
    },
    /// Compute compactness, specificity, generalization and surface distances.
    Evaluate(EvaluateArgs),
    /// Reconstruct a particle file as an OBJ mesh.
    Reconstruct(ReconstructArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [1.0, 2.0])]
    pub x_range: Vec<f64>,
    /// Semi-axis shared by y and z.
    #[arg(long, default_value_t = 0.5)]
    pub yz: f64,
    /// Voxels per axis.
    #[arg(long, default_value_t = 64)]
    pub dims: usize,
    /// Recorded in the manifest; the cohort itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model manifest written by `optimize`.
    #[arg(long, conflicts_with_all = ["particles", "grids"])]
    pub model: Option<PathBuf>,
    #[arg(long, num_args = 1.., requires = "grids")]
    pub particles: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub grids: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub modes: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = Kernel::Biharmonic)]
    pub kernel: Kernel,
    /// Dipole offset; defaults to two mean voxel spacings of each grid.
    #[arg(long)]
    pub offset: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    pub particles: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Grid whose box bounds the lattice and whose spacing sets the offset.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, default_value_t = Kernel::Biharmonic)]
    pub kernel: Kernel,
    #[arg(long)]
    pub offset: Option<f64>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(args) => gen_data(&args).map(drop),
        Command::Optimize { config } => optimize(&RunConfig::load(&config)?).map(drop),
        Command::Evaluate(args) => evaluate(&args).map(drop),
        Command::Reconstruct(args) => reconstruct(&args).map(drop),
    }
}

/// Parses `RBFPDM_THREADS`; `None` when unset.
pub fn thread_count(value: Option<&str>) -> std::result::Result<Option<usize>, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        },
    }
}

fn grid_name(n: usize) -> String {
    format!("ellipsoid_{n:03}.sdfgrid")
}

fn particle_name(n: usize) -> String {
    format!("shape_{n:03}.particles")
}

/// Writes the ellipsoid grids plus `manifest.csv`; returns the grid paths.
pub fn gen_data(args: &GenDataArgs) -> Result<Vec<PathBuf>> {
    let cohort = make_ellipsoid_cohort(
        args.count,
        (args.x_range[0], args.x_range[1]),
        (args.yz, args.yz),
        [args.dims; 3],
    )?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let names: Vec<String> = (0..args.count).map(grid_name).collect();
    let mut paths = Vec::with_capacity(args.count);
    for (grid, name) in cohort.grids.iter().zip(&names) {
        let path = args.out.join(name);
        grid.save(&path)?;
        paths.push(path);
    }
    io::write_axes_manifest(args.out.join("manifest.csv"), &names, &cohort.semi_axes)?;
    Ok(paths)
}

pub fn load_grids(paths: &[PathBuf]) -> Result<Vec<SdfGrid>> {
    paths.iter().map(SdfGrid::load).collect()
}

fn write_particle_set(dir: &Path, state: &CohortState) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    state
        .shapes
        .iter()
        .enumerate()
        .map(|(n, ps)| {
            let path = dir.join(particle_name(n));
            io::save_particles(&path, ps).map(|_| path)
        })
        .collect()
}

/// Runs the optimizer and writes particle files, `history.csv`,
/// `manifest.csv` and a copy of the resolved config into the output
/// directory.
pub fn optimize(config: &RunConfig) -> Result<CohortState> {
    config.validate()?;
    let grids = load_grids(&config.data.grids)?;
    let out = &config.data.output;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let every = config.data.checkpoint_every;
    let optimizer = Optimizer::new(&grids, config.optimizer.clone())?;
    let state = optimizer.run(|state| {
        if every > 0 && state.epoch % every == 0 {
            let dir = out.join("checkpoints").join(format!("epoch_{:04}", state.epoch));
            write_particle_set(&dir, state)?;
        }
        Ok(())
    })?;

    write_particle_set(out, &state)?;
    let entries: Vec<ManifestEntry> = config
        .data
        .grids
        .iter()
        .enumerate()
        .map(|(n, g)| ManifestEntry {
            shape_id: n,
            grid: g.clone(),
            particles: particle_name(n).into(),
        })
        .collect();
    io::write_manifest(out.join("manifest.csv"), &entries)?;
    io::write_history(out.join("history.csv"), &state.history)?;
    let echo = out.join("config.toml");
    fs::write(&echo, config.to_toml()?).map_err(|e| Error::io(&echo, e))?;
    Ok(state)
}

/// Fits the RBF surface of `shape`, retrying with a small ridge if the
/// plain system is singular.
pub fn fit_shape(shape: &ParticleSystem, kernel: Kernel, offset: f64) -> Result<RbfSurface> {
    let dipoles = shape.dipoles(offset)?;
    match RbfSurface::fit(dipoles.clone(), kernel, 0.0) {
        Err(Error::SingularSystem { .. }) => RbfSurface::fit(dipoles, kernel, FALLBACK_RIDGE),
        other => other,
    }
}

/// Zero level set of the grid's trilinear field over its own box.
pub fn grid_mesh(grid: &SdfGrid, resolution: usize) -> Result<TriMesh> {
    let (lower, upper) = grid.bounds();
    extract_fn(lower, upper, [resolution; 3], 0.0, |p| grid.distance(p))
}

/// Mesh of the RBF surface through `shape`, sampled over `grid`'s box.
pub fn shape_mesh(shape: &ParticleSystem, grid: &SdfGrid, kernel: Kernel, offset: Option<f64>, resolution: usize) -> Result<TriMesh> {
    let offset = offset.unwrap_or_else(|| 2.0 * grid.mean_spacing());
    let surface = fit_shape(shape, kernel, offset)?;
    let (lower, upper) = grid.bounds();
    surface.extract_mesh(&lower, &upper, [resolution; 3])
}

/// Metrics for a cohort of particle systems and their grids.
pub fn evaluate_cohort(
    shapes: &[ParticleSystem],
    grids: &[SdfGrid],
    options: &MetricOptions,
    kernel: Kernel,
    offset: Option<f64>,
) -> Result<MetricsReport> {
    if shapes.len() != grids.len() {
        return Err(Error::invalid(format!(
            "{} particle files but {} grids",
            shapes.len(),
            grids.len()
        )));
    }
    let j = shapes.first().ok_or_else(|| Error::invalid("no particle files"))?.len();
    if let Some(bad) = shapes.iter().find(|s| s.len() != j) {
        return Err(Error::invalid(format!(
            "particle file {} has {} particles, expected {j}",
            bad.shape_id,
            bad.len()
        )));
    }
    let mut report = MetricsReport::default();
    let vectors: Vec<Vec<f64>> = shapes.iter().map(ParticleSystem::flattened).collect();
    match metrics::pca_fit(&vectors) {
        Ok(model) => {
            let available = model.mode_count();
            let modes = options.max_modes.min(available);
            if options.max_modes > available {
                report.rows.push(ReportRow::Warning {
                    modes: available,
                    message: "modes_capped",
                });
            }
            for m in 1..=modes {
                match metrics::compactness(&model, m) {
                    Ok(value) => report.rows.push(ReportRow::Metric { name: "compactness", modes: m, value }),
                    Err(Error::ZeroVariance) => {
                        report.rows.push(ReportRow::Error { modes: 0, message: "zero_variance" });
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            for m in 1..=modes {
                let value = metrics::specificity(&model, &vectors, m, options.specificity_samples, options.seed)?;
                report.rows.push(ReportRow::Metric { name: "specificity", modes: m, value });
            }
            if vectors.len() >= 3 {
                for m in 1..=modes {
                    let value = metrics::generalization(&vectors, m)?;
                    report.rows.push(ReportRow::Metric { name: "generalization", modes: m, value });
                }
            } else {
                report.rows.push(ReportRow::Error { modes: 0, message: "degenerate_cohort" });
            }
        }
        Err(Error::DegenerateCohort(_)) => {
            report.rows.push(ReportRow::Error { modes: 0, message: "degenerate_cohort" });
        }
        Err(e) => return Err(e),
    }
    for (shape, grid) in shapes.iter().zip(grids) {
        let truth = grid_mesh(grid, options.resolution)?;
        let mesh = shape_mesh(shape, grid, kernel, offset, options.resolution)?;
        report.distances.push(ShapeDistance {
            shape_id: shape.shape_id,
            distance: surface_to_surface_distance(&mesh, &truth)?,
        });
    }
    Ok(report)
}

pub fn evaluate(args: &EvaluateArgs) -> Result<MetricsReport> {
    let (particles, grids) = match &args.model {
        Some(manifest) => {
            let entries = io::read_manifest(manifest)?;
            entries.into_iter().map(|e| (e.particles, e.grid)).unzip()
        }
        None => (args.particles.clone(), args.grids.clone()),
    };
    if particles.len() != grids.len() {
        return Err(Error::invalid(format!(
            "{} particle files but {} grids",
            particles.len(),
            grids.len()
        )));
    }
    let shapes = particles
        .iter()
        .enumerate()
        .map(|(n, p)| io::load_particles(p, n))
        .collect::<Result<Vec<_>>>()?;
    let grids = load_grids(&grids)?;
    let options = MetricOptions {
        max_modes: args.modes,
        specificity_samples: args.samples,
        resolution: args.resolution,
        seed: args.seed,
    };
    let report = evaluate_cohort(&shapes, &grids, &options, args.kernel, args.offset)?;
    report.write(&args.out)?;
    Ok(report)
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<TriMesh> {
    let shape = io::load_particles(&args.particles, 0)?;
    let mesh = match &args.grid {
        Some(path) => shape_mesh(&shape, &SdfGrid::load(path)?, args.kernel, args.offset, args.resolution)?,
        None => {
            let mut lower = shape.points()[0];
            let mut upper = lower;
            for p in shape.points() {
                lower = lower.inf(p);
                upper = upper.sup(p);
            }
            let diagonal = (upper - lower).norm();
            let offset = args.offset.unwrap_or(diagonal / 32.0);
            let pad = 0.25 * diagonal;
            let surface = fit_shape(&shape, args.kernel, offset)?;
            let pad = nalgebra::Vector3::repeat(pad);
            surface.extract_mesh(&Point3::from(lower - pad), &Point3::from(upper + pad), [args.resolution; 3])?
        }
    };
    mesh.write_obj(&args.out)?;
    Ok(mesh)
}
