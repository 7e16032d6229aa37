//! Shared helpers for the integration tests and the acceptance runner.

#![allow(dead_code)]

use nalgebra::{Point3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rbfpdm::losses::{total_loss, CohortMean, LossConfig, ShapeInputs};
use rbfpdm::rbf::{build_dipoles, Kernel, RbfSurface};
use rbfpdm::sdf_grid::{sample_narrow_band, NarrowBand};
use rbfpdm::SdfGrid;

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-3;
pub const FD_FLOOR: f64 = 1e-8;

/// Weight sets isolating one term each, then all of them together.
pub fn term_configs() -> Vec<(&'static str, LossConfig)> {
    let only = |alpha, beta, gamma, zeta| LossConfig {
        alpha,
        beta,
        gamma,
        zeta,
        error_pull: 1.0,
        covariance_floor: Some(1e-3),
        ..LossConfig::default()
    };
    vec![
        ("surface", only(1.0, 0.0, 0.0, 0.0)),
        ("sampling", only(0.0, 1.0, 0.0, 0.0)),
        ("eigenshape", only(0.0, 0.0, 1.0, 0.0)),
        ("correspondence", only(0.0, 0.0, 0.0, 1.0)),
        ("total", only(0.3, 1.0, 0.5, 0.2)),
    ]
}

/// A random minibatch around the unit sphere. Normals stay fixed while the
/// points move.
pub struct GradientCase {
    pub grid: SdfGrid,
    pub points: Vec<Vec<Point3<f64>>>,
    pub normals: Vec<Vec<Unit<Vector3<f64>>>>,
    pub bands: Vec<NarrowBand>,
    pub mean: CohortMean,
    pub kernel: Kernel,
    pub offset: f64,
}

fn unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let v = Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    v.normalize()
}

/// Keeps every coordinate `margin` away from trilinear cell faces and the
/// point itself `margin` away from the zero set, where the field has kinks.
fn smooth_spot(grid: &SdfGrid, p: &Point3<f64>, margin: f64) -> bool {
    let h = grid.spacing();
    let o = grid.origin();
    let clear = (0..3).all(|d| {
        let t = (p[d] - o[d]) / h[d];
        (t - t.round()).abs() * h[d] > margin
    });
    clear && grid.distance(p).abs() > margin
}

impl GradientCase {
    pub fn new(seed: u64, shapes: usize, particles: usize) -> Self {
        let grid = SdfGrid::centered_cube(1.6, 33, |p| p.coords.norm() - 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(shapes);
        let mut normals = Vec::with_capacity(shapes);
        for _ in 0..shapes {
            let mut pts: Vec<Point3<f64>> = Vec::with_capacity(particles);
            let mut ns = Vec::with_capacity(particles);
            while pts.len() < particles {
                let dir = unit(&mut rng);
                let p = Point3::from(dir * (1.0 + rng.random_range(-0.15..0.15)));
                if !smooth_spot(&grid, &p, 1e-3) || pts.iter().any(|q| (q - p).norm() < 0.3) {
                    continue;
                }
                pts.push(p);
                ns.push(Unit::new_normalize(dir + unit(&mut rng) * 0.2));
            }
            points.push(pts);
            normals.push(ns);
        }
        let bands = (0..shapes)
            .map(|k| sample_narrow_band(&grid, 0.2, 60, seed.wrapping_mul(31).wrapping_add(k as u64)).unwrap())
            .collect();
        let jittered: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                points[0]
                    .iter()
                    .flat_map(|p| {
                        let q = p + unit(&mut rng) * 0.1;
                        [q.x, q.y, q.z]
                    })
                    .collect()
            })
            .collect();
        let mean = CohortMean::from_vectors(&jittered, 1).unwrap();
        GradientCase {
            grid,
            points,
            normals,
            bands,
            mean,
            kernel: Kernel::ALL[seed as usize % Kernel::ALL.len()],
            offset: 0.05,
        }
    }

    /// Loss value and per-particle gradients for the given positions.
    pub fn evaluate(&self, points: &[Vec<Point3<f64>>], config: &LossConfig) -> (f64, Vec<Vec<Vector3<f64>>>) {
        let surfaces: Vec<Option<RbfSurface>> = points
            .iter()
            .zip(&self.normals)
            .map(|(p, n)| {
                (config.beta > 0.0).then(|| {
                    RbfSurface::fit(build_dipoles(p, n, self.offset).unwrap(), self.kernel, 0.0).unwrap()
                })
            })
            .collect();
        let inputs: Vec<ShapeInputs<'_>> = points
            .iter()
            .zip(&self.bands)
            .zip(&surfaces)
            .map(|((p, band), s)| ShapeInputs {
                points: p,
                grid: &self.grid,
                band,
                surface: s.as_ref(),
            })
            .collect();
        let out = total_loss(&inputs, Some(&self.mean), config).unwrap();
        (out.total, out.gradients)
    }

    /// Worst relative mismatch between analytic and central-difference
    /// gradients over every coordinate of every particle.
    pub fn worst_error(&self, config: &LossConfig) -> f64 {
        let (_, analytic) = self.evaluate(&self.points, config);
        let mut worst: f64 = 0.0;
        for k in 0..self.points.len() {
            for j in 0..self.points[k].len() {
                for d in 0..3 {
                    let mut plus = self.points.clone();
                    plus[k][j][d] += FD_STEP;
                    let mut minus = self.points.clone();
                    minus[k][j][d] -= FD_STEP;
                    let fd = (self.evaluate(&plus, config).0 - self.evaluate(&minus, config).0) / (2.0 * FD_STEP);
                    let a = analytic[k][j][d];
                    worst = worst.max((a - fd).abs() / fd.abs().max(FD_FLOOR));
                }
            }
        }
        worst
    }
}

/// Runs the gradient gate over `seeds` and returns the worst error per term.
pub fn gradient_gate(seeds: std::ops::Range<u64>) -> Vec<(&'static str, f64)> {
    let configs = term_configs();
    let mut worst = vec![0.0f64; configs.len()];
    for seed in seeds {
        let case = GradientCase::new(seed, 3, 8);
        for (w, (_, config)) in worst.iter_mut().zip(&configs) {
            *w = w.max(case.worst_error(config));
        }
    }
    configs.iter().map(|(name, _)| *name).zip(worst).collect()
}
