//! Minibatch gradient descent over a cohort of particle systems.
//!
//! One epoch visits every shape once in a seeded random order. For each
//! minibatch the narrow bands are resampled, per-shape RBF surfaces are
//! refit, the total loss gradient is evaluated against the previous epoch's
//! cohort mean, and a plain SGD step is applied. Steps are capped in length,
//! particles are clamped to their grid box, and normals are recomputed from
//! the distance field afterwards.

use nalgebra::{Point3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{self, CohortMean, LossBreakdown, LossConfig, ShapeInputs};
use crate::rbf::{Kernel, ParticleSystem, RbfSurface, MAX_CONTROL_POINTS, MIN_PARTICLES};
use crate::sdf_grid::{BandSampler, NarrowBand, SdfGrid};

/// Ridge used when an unregularized fit turns out singular.
pub const FALLBACK_RIDGE: f64 = 1e-8;

/// Newton projection steps applied to freshly sampled particles.
pub const PROJECTION_STEPS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub pre_opt_epochs: usize,
    /// Control points per shape.
    pub particles: usize,
    pub kernel: Kernel,
    /// Ridge added to the RBF kernel diagonal.
    pub ridge: f64,
    /// Cohort index of the shape used for initialization and pre-optimization.
    pub reference_shape: usize,
    /// Per-step displacement cap in units of the grid's smallest spacing.
    pub max_step_voxels: f64,
    pub loss: LossConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            learning_rate: 1.0,
            epochs: 100,
            seed: 0,
            pre_opt_epochs: 20,
            particles: 128,
            kernel: Kernel::Biharmonic,
            ridge: 0.0,
            reference_shape: 0,
            max_step_voxels: 2.0,
            loss: LossConfig::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(MIN_PARTICLES..=MAX_CONTROL_POINTS).contains(&self.particles) {
            return Err(Error::invalid(format!(
                "particle count must lie in {MIN_PARTICLES}..={MAX_CONTROL_POINTS}"
            )));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::invalid("ridge must be non-negative"));
        }
        if !(self.max_step_voxels > 0.0) {
            return Err(Error::invalid("step cap must be positive"));
        }
        self.loss.validate()
    }
}

/// Loss totals accumulated over one epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub surface: f64,
    pub sampling: f64,
    pub eigenshape: f64,
    pub correspondence: f64,
    pub total: f64,
}

impl EpochRecord {
    fn accumulate(&mut self, b: &LossBreakdown) {
        self.surface += b.surface;
        self.sampling += b.sampling;
        self.eigenshape += b.eigenshape;
        self.correspondence += b.correspondence;
        self.total += b.total;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortState {
    pub shapes: Vec<ParticleSystem>,
    /// Mean over all shapes at the end of the last completed epoch.
    pub mean: Option<CohortMean>,
    /// Number of completed epochs.
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
}

impl CohortState {
    pub fn new(shapes: Vec<ParticleSystem>) -> Result<Self> {
        let j = shapes
            .first()
            .ok_or_else(|| Error::invalid("empty cohort"))?
            .len();
        if shapes.iter().any(|s| s.len() != j) {
            return Err(Error::invalid("all shapes must carry the same number of particles"));
        }
        Ok(CohortState {
            shapes,
            mean: None,
            epoch: 0,
            history: Vec::new(),
        })
    }

    /// Copies `reference` verbatim to `count` shapes.
    pub fn broadcast(reference: &ParticleSystem, count: usize) -> Result<Self> {
        CohortState::new(
            (0..count)
                .map(|i| reference.clone().with_shape_id(i))
                .collect(),
        )
    }

    /// Moves every particle onto the zero level set of its own grid and
    /// refreshes its normal. Useful after [`CohortState::broadcast`], whose
    /// copies lie on the reference surface only.
    pub fn project_onto(&mut self, grids: &[SdfGrid]) -> Result<()> {
        if grids.len() != self.shapes.len() {
            return Err(Error::invalid(format!(
                "cohort has {} shapes but {} grids",
                self.shapes.len(),
                grids.len()
            )));
        }
        for (shape, grid) in self.shapes.iter_mut().zip(grids) {
            for p in shape.points_mut().iter_mut() {
                *p = grid.project_to_surface(p, PROJECTION_STEPS);
            }
            let points = shape.points().to_vec();
            for (n, p) in shape.normals_mut().iter_mut().zip(&points) {
                if let Ok(fresh) = grid.normal(p) {
                    *n = fresh;
                }
            }
        }
        self.mean = None;
        Ok(())
    }

    pub fn flattened(&self) -> Vec<Vec<f64>> {
        self.shapes.iter().map(ParticleSystem::flattened).collect()
    }
}

/// Mixes a base seed with stream identifiers (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: &[u64]) -> u64 {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &s in stream {
        h = h.wrapping_add(s).wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_BAND: u64 = 3;

/// Band half-width used for `grid` under `config`.
pub fn band_half_width(config: &LossConfig, grid: &SdfGrid) -> f64 {
    config
        .band_half_width
        .unwrap_or_else(|| 2.0 * grid.mean_spacing())
}

/// Draws `count` particles uniformly from the narrow band of `grid` and
/// projects them onto the zero level set.
pub fn initialize_particles(
    grid: &SdfGrid,
    count: usize,
    half_width: f64,
    seed: u64,
) -> Result<ParticleSystem> {
    if count < MIN_PARTICLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_PARTICLES} particles, got {count}"
        )));
    }
    let sampler = BandSampler::new(grid, half_width)?;
    let mut points: Vec<Point3<f64>> = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    let spread = 1e-3 * grid.min_spacing();
    for round in 0..64u64 {
        let band = sampler.sample(count, derive_seed(seed, &[STREAM_INIT, round]));
        for candidate in band.points {
            let p = grid.project_to_surface(&candidate, PROJECTION_STEPS);
            let Ok(n) = grid.normal(&p) else { continue };
            if points.iter().any(|q| (q - p).norm() <= spread) {
                continue;
            }
            points.push(p);
            normals.push(n);
            if points.len() == count {
                return ParticleSystem::new(points, normals, 0);
            }
        }
    }
    Err(Error::invalid(format!(
        "could not place {count} distinct particles on the surface"
    )))
}

/// Stateful driver holding the cohort grids and their cached band samplers.
pub struct Optimizer<'a> {
    grids: &'a [SdfGrid],
    samplers: Vec<BandSampler<'a>>,
    half_width: f64,
    config: OptimizerConfig,
}

impl<'a> Optimizer<'a> {
    pub fn new(grids: &'a [SdfGrid], config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let reference = grids
            .get(config.reference_shape)
            .ok_or_else(|| Error::invalid("reference shape index out of range"))?;
        let half_width = band_half_width(&config.loss, reference);
        let samplers = grids
            .iter()
            .map(|g| BandSampler::new(g, half_width))
            .collect::<Result<Vec<_>>>()?;
        Ok(Optimizer {
            grids,
            samplers,
            half_width,
            config,
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn grids(&self) -> &[SdfGrid] {
        self.grids
    }

    pub fn initialize(&self) -> Result<ParticleSystem> {
        initialize_particles(
            &self.grids[self.config.reference_shape],
            self.config.particles,
            self.half_width,
            self.config.seed,
        )
    }

    /// Runs `pre_opt_epochs` epochs on the reference shape alone, without
    /// cohort terms.
    pub fn pre_optimize(&self, init: &ParticleSystem) -> Result<ParticleSystem> {
        if self.config.pre_opt_epochs == 0 {
            return Ok(init.clone());
        }
        let reference = self.config.reference_shape;
        let mut config = self.config.clone();
        config.loss.gamma = 0.0;
        config.loss.zeta = 0.0;
        config.loss.batch_size = 1;
        config.reference_shape = 0;
        let grids = std::slice::from_ref(&self.grids[reference]);
        let single = Optimizer {
            grids,
            samplers: vec![self.samplers[reference].clone()],
            half_width: self.half_width,
            config,
        };
        let mut state = CohortState::new(vec![init.clone()])?;
        for _ in 0..self.config.pre_opt_epochs {
            single.run_epoch(&mut state)?;
        }
        let mut out = state.shapes.swap_remove(0);
        out.shape_id = init.shape_id;
        Ok(out)
    }

    fn fit_surface(&self, shape: &ParticleSystem) -> Result<RbfSurface> {
        let dipoles = shape.dipoles(self.half_width)?;
        match RbfSurface::fit(dipoles.clone(), self.config.kernel, self.config.ridge) {
            Err(Error::SingularSystem { .. }) if self.config.ridge < FALLBACK_RIDGE => {
                RbfSurface::fit(dipoles, self.config.kernel, FALLBACK_RIDGE)
            }
            other => other,
        }
    }

    /// One pass over the cohort; refreshes the cohort mean at the end.
    pub fn run_epoch(&self, state: &mut CohortState) -> Result<()> {
        let count = state.shapes.len();
        if count != self.grids.len() {
            return Err(Error::invalid(format!(
                "cohort has {count} shapes but {} grids",
                self.grids.len()
            )));
        }
        let epoch = state.epoch as u64 + 1;
        let seed = self.config.seed;
        let mut order: Vec<usize> = (0..count).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
            seed,
            &[STREAM_SHUFFLE, epoch],
        )));

        let batch_size = self.config.loss.batch_size.min(count).max(1);
        let needs_surface = self.config.loss.beta > 0.0;
        let mut record = EpochRecord {
            epoch: epoch as usize,
            ..EpochRecord::default()
        };

        for batch in order.chunks(batch_size) {
            let prepared: Vec<(NarrowBand, Option<RbfSurface>)> = batch
                .par_iter()
                .map(|&i| {
                    let band = self.samplers[i].sample(
                        self.config.loss.band_samples,
                        derive_seed(seed, &[STREAM_BAND, epoch, i as u64]),
                    );
                    let surface = if needs_surface {
                        Some(self.fit_surface(&state.shapes[i])?)
                    } else {
                        None
                    };
                    Ok((band, surface))
                })
                .collect::<Result<_>>()?;

            let inputs: Vec<ShapeInputs<'_>> = batch
                .iter()
                .zip(&prepared)
                .map(|(&i, (band, surface))| ShapeInputs {
                    points: state.shapes[i].points(),
                    grid: &self.grids[i],
                    band,
                    surface: surface.as_ref(),
                })
                .collect();
            let mean = if batch.len() >= 2 { state.mean.as_ref() } else { None };
            let breakdown = losses::total_loss(&inputs, mean, &self.config.loss)?;
            record.accumulate(&breakdown);

            for (&i, grads) in batch.iter().zip(&breakdown.gradients) {
                self.apply_step(&mut state.shapes[i], &self.grids[i], grads);
            }
        }

        state.epoch += 1;
        state.mean = Some(CohortMean::from_vectors(&state.flattened(), state.epoch)?);
        state.history.push(record);
        Ok(())
    }

    fn apply_step(&self, shape: &mut ParticleSystem, grid: &SdfGrid, grads: &[Vector3<f64>]) {
        let cap = self.config.max_step_voxels * grid.min_spacing();
        let lr = self.config.learning_rate;
        for (p, g) in shape.points_mut().iter_mut().zip(grads) {
            let mut step = -g * lr;
            let len = step.norm();
            if len > cap {
                step *= cap / len;
            }
            *p = grid.clamp(&(*p + step));
        }
        let points = shape.points().to_vec();
        for (n, p) in shape.normals_mut().iter_mut().zip(&points) {
            if let Ok(fresh) = grid.normal(p) {
                *n = fresh;
            }
        }
    }

    /// Initialization, pre-optimization, broadcast and `epochs` cohort
    /// epochs. `on_epoch` runs after each completed epoch.
    pub fn run(&self, mut on_epoch: impl FnMut(&CohortState) -> Result<()>) -> Result<CohortState> {
        let init = self.initialize()?;
        let pre = self.pre_optimize(&init)?;
        let mut state = CohortState::broadcast(&pre, self.grids.len())?;
        for _ in 0..self.config.epochs {
            self.run_epoch(&mut state)?;
            on_epoch(&state)?;
        }
        Ok(state)
    }
}

/// Builds a model over `grids` with `config`.
pub fn optimize(grids: &[SdfGrid], config: &OptimizerConfig) -> Result<CohortState> {
    Optimizer::new(grids, config.clone())?.run(|_| Ok(()))
}
