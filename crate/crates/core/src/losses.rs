//! The four particle losses and their gradients.
//!
//! Per-shape terms (surface adherence and narrow-band sampling) act on one
//! shape's control points. Cohort terms (eigenshape entropy and
//! correspondence) act on a minibatch of flattened particle vectors measured
//! against the cohort mean of the previous epoch. Cohort statistics are
//! formed through the `K x K` Gram matrix of deviations so the `3J x 3J`
//! scatter matrix is never materialized.

use nalgebra::{DMatrix, Point3, SymmetricEigen, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rbf::RbfSurface;
use crate::sdf_grid::{NarrowBand, SdfGrid};
use serde::{Deserialize, Serialize};

/// Loss weights and sampling hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Surface adherence weight.
    pub alpha: f64,
    /// Narrow-band sampling weight.
    pub beta: f64,
    /// Eigenshape (entropy) weight.
    pub gamma: f64,
    /// Correspondence weight.
    pub zeta: f64,
    /// Pull of the RBF reconstruction error in the sampling loss.
    pub error_pull: f64,
    /// Dipole offset and band half-width. `None` means two mean voxel spacings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band_half_width: Option<f64>,
    /// Minibatch size.
    pub batch_size: usize,
    /// Narrow-band points per shape and epoch.
    pub band_samples: usize,
    /// Covariance eigenvalue floor. `None` means `1e-6` times the mean
    /// squared extent of the cohort mean shape.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance_floor: Option<f64>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            alpha: 0.1,
            beta: 1.0,
            gamma: 0.01,
            zeta: 0.01,
            error_pull: 10.0,
            band_half_width: None,
            batch_size: 8,
            band_samples: 10_000,
            covariance_floor: None,
        }
    }
}

impl LossConfig {
    /// Weights used for the synthetic ellipsoid family.
    pub fn ellipsoid() -> Self {
        LossConfig {
            alpha: 0.01,
            error_pull: 1.0,
            ..LossConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("error_pull", self.error_pull),
        ];
        for (name, w) in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {w}")));
            }
        }
        if !(self.alpha > 0.0 || self.beta > 0.0 || self.gamma > 0.0 || self.zeta > 0.0) {
            return Err(Error::invalid("at least one loss weight must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if (self.gamma > 0.0 || self.zeta > 0.0) && self.batch_size < 2 {
            return Err(Error::invalid(
                "cohort losses need a batch size of at least 2",
            ));
        }
        if self.band_samples == 0 {
            return Err(Error::invalid("band sample count must be at least 1"));
        }
        if let Some(s) = self.band_half_width {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidBand(s));
            }
        }
        if let Some(eps) = self.covariance_floor {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::invalid("covariance floor must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn has_cohort_terms(&self) -> bool {
        self.gamma > 0.0 || self.zeta > 0.0
    }
}

/// Flattened mean particle positions of a cohort, stamped with the epoch whose
/// end state it summarizes.
#[derive(Clone, Debug, PartialEq)]
pub struct CohortMean {
    pub values: Vec<f64>,
    pub epoch: usize,
}

impl CohortMean {
    pub fn from_vectors(vectors: &[Vec<f64>], epoch: usize) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::invalid("mean of an empty cohort"))?;
        let mut values = vec![0.0; first.len()];
        for v in vectors {
            if v.len() != values.len() {
                return Err(Error::invalid("particle vectors differ in length"));
            }
            for (m, x) in values.iter_mut().zip(v) {
                *m += x;
            }
        }
        let scale = 1.0 / vectors.len() as f64;
        values.iter_mut().for_each(|m| *m *= scale);
        Ok(CohortMean { values, epoch })
    }

    /// Mean squared distance of the mean shape's particles from their centroid.
    pub fn squared_extent(&self) -> f64 {
        let j = self.values.len() / 3;
        if j == 0 {
            return 0.0;
        }
        let pts: Vec<Vector3<f64>> = self
            .values
            .chunks_exact(3)
            .map(|c| Vector3::new(c[0], c[1], c[2]))
            .collect();
        let centroid = pts.iter().sum::<Vector3<f64>>() / j as f64;
        pts.iter().map(|p| (p - centroid).norm_squared()).sum::<f64>() / j as f64
    }

    pub fn default_covariance_floor(&self) -> f64 {
        1e-6 * self.squared_extent()
    }
}

/// Value and per-sample gradient (`K` rows of length `3J`) of a cohort term.
#[derive(Clone, Debug, PartialEq)]
pub struct CohortTerm {
    pub value: f64,
    pub gradients: Vec<Vec<f64>>,
}

/// Per-shape values, cohort values and the weighted total, plus
/// `d total / d p` for every batch particle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub surface: f64,
    pub sampling: f64,
    pub eigenshape: f64,
    pub correspondence: f64,
    pub total: f64,
    pub gradients: Vec<Vec<Vector3<f64>>>,
}

// ---------------------------------------------------------------------------
// Surface adherence

/// Sum of absolute grid distances of the control points.
pub fn surface_loss(points: &[Point3<f64>], grid: &SdfGrid) -> f64 {
    points.iter().map(|p| grid.distance(p).abs()).sum()
}

/// `sign(D) grad D` per control point, with zero subgradient on the surface.
pub fn surface_gradient(points: &[Point3<f64>], grid: &SdfGrid) -> Vec<Vector3<f64>> {
    points
        .iter()
        .map(|p| {
            let (d, g) = grid.distance_and_gradient(p);
            if d > 0.0 {
                g
            } else if d < 0.0 {
                -g
            } else {
                Vector3::zeros()
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Narrow-band sampling

/// Row-wise soft minimum `exp(-k_j) / sum_j' exp(-k_j')`.
pub fn softmin(row: &[f64]) -> Vec<f64> {
    let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
    let mut out: Vec<f64> = row.iter().map(|k| (-(k - lo)).exp()).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

fn band_row(points: &[Point3<f64>], b: &Point3<f64>, dist: &mut [f64]) {
    for (d, p) in dist.iter_mut().zip(points) {
        *d = (b - p).norm();
    }
}

/// Mean over the `R x J` matrix `softmin(K) * K * (c E + 1)`, where `K` holds
/// band-point to control-point distances and `E` broadcasts the per-band-point
/// reconstruction errors along rows.
pub fn sampling_loss(points: &[Point3<f64>], band: &[Point3<f64>], errors: &[f64], error_pull: f64) -> f64 {
    assert_eq!(band.len(), errors.len(), "one error per band point");
    if points.is_empty() || band.is_empty() {
        return 0.0;
    }
    let mut dist = vec![0.0; points.len()];
    let mut sum = 0.0;
    for (b, e) in band.iter().zip(errors) {
        band_row(points, b, &mut dist);
        let weights = softmin(&dist);
        let row: f64 = weights.iter().zip(&dist).map(|(w, k)| w * k).sum();
        sum += row * (error_pull * e + 1.0);
    }
    sum / (band.len() * points.len()) as f64
}

/// Sampling loss and its gradient for one shape, with the reconstruction
/// errors taken from `surface` and `grid`.
///
/// The gradient combines the distance/softmin path with the error path; the
/// latter runs through the RBF solve via [`RbfSurface::site_gradients`]. The
/// three dipole sites of a control point move rigidly with it (normals are
/// held fixed).
pub fn sampling_term(
    points: &[Point3<f64>],
    band: &NarrowBand,
    grid: &SdfGrid,
    surface: &RbfSurface,
    error_pull: f64,
) -> (f64, Vec<Vector3<f64>>) {
    let j_count = points.len();
    let r_count = band.points.len();
    let mut grads = vec![Vector3::zeros(); j_count];
    if j_count == 0 || r_count == 0 {
        return (0.0, grads);
    }
    let norm = 1.0 / (r_count * j_count) as f64;
    let mut dist = vec![0.0; j_count];
    let mut seeds = Vec::with_capacity(r_count);
    let mut value = 0.0;
    for b in &band.points {
        let f = surface.evaluate(b);
        let residual = f - grid.distance(b);
        let error = residual * residual;

        band_row(points, b, &mut dist);
        let weights = softmin(&dist);
        let row: f64 = weights.iter().zip(&dist).map(|(w, k)| w * k).sum();
        let scale = (error_pull * error + 1.0) * norm;
        value += row * scale;

        // d(row)/dk_j = s_j (1 - k_j + row)
        for ((g, p), (w, k)) in grads.iter_mut().zip(points).zip(weights.iter().zip(&dist)) {
            if *k > 0.0 {
                let coef = scale * w * (1.0 - k + row);
                *g += (p - b) * (coef / k);
            }
        }
        seeds.push(error_pull * row * norm * 2.0 * residual);
    }

    if error_pull != 0.0 {
        let site_grads = surface.site_gradients(&band.points, &seeds);
        for (j, g) in grads.iter_mut().enumerate() {
            *g += site_grads[3 * j] + site_grads[3 * j + 1] + site_grads[3 * j + 2];
        }
    }
    (value, grads)
}

// ---------------------------------------------------------------------------
// Cohort terms

fn deviations(batch: &[&[f64]], mean: &CohortMean) -> Result<DMatrix<f64>> {
    let dim = mean.values.len();
    let mut g = DMatrix::zeros(batch.len(), dim);
    for (k, v) in batch.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::invalid("particle vector length differs from the mean"));
        }
        for (d, (x, m)) in v.iter().zip(&mean.values).enumerate() {
            g[(k, d)] = x - m;
        }
    }
    Ok(g)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn check_batch(batch: &[&[f64]]) -> Result<()> {
    if batch.len() < 2 {
        return Err(Error::DegenerateCohort(batch.len()));
    }
    Ok(())
}

/// Frobenius norm of the scatter matrix `sum_k (P_k - mu)(P_k - mu)^T`.
pub fn correspondence_loss(batch: &[&[f64]], mean: &CohortMean) -> Result<f64> {
    Ok(correspondence_term(batch, mean)?.value)
}

/// Correspondence loss with gradient `2 (G G^T) G / L`, `G` being the `K x 3J`
/// deviation matrix.
pub fn correspondence_term(batch: &[&[f64]], mean: &CohortMean) -> Result<CohortTerm> {
    check_batch(batch)?;
    let g = deviations(batch, mean)?;
    let gram = &g * g.transpose();
    let value = gram.norm();
    let gradients = if value > 0.0 {
        rows(&((&gram * &g) * (2.0 / value)))
    } else {
        vec![vec![0.0; g.ncols()]; g.nrows()]
    };
    Ok(CohortTerm { value, gradients })
}

/// Eigenvalues of the covariance `(1 / (3JK)) sum_k d_k d_k^T` that can be
/// non-zero (at most `min(K, 3J)` of them), in descending order.
pub fn covariance_spectrum(batch: &[&[f64]], mean: &CohortMean) -> Result<Vec<f64>> {
    check_batch(batch)?;
    let g = deviations(batch, mean)?;
    let (k, dim) = g.shape();
    let scale = 1.0 / (dim * k) as f64;
    let eig = SymmetricEigen::new(&g * g.transpose() * scale);
    let mut values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.truncate(k.min(dim));
    Ok(values)
}

/// Gaussian differential entropy `1/2 log |Sigma + floor I|` of the batch.
pub fn eigenshape_loss(batch: &[&[f64]], mean: &CohortMean, floor: f64) -> Result<f64> {
    Ok(eigenshape_term(batch, mean, floor)?.value)
}

pub fn eigenshape_term(batch: &[&[f64]], mean: &CohortMean, floor: f64) -> Result<CohortTerm> {
    check_batch(batch)?;
    let g = deviations(batch, mean)?;
    let (k, dim) = g.shape();
    let scale = 1.0 / (dim * k) as f64;
    if floor < 0.0 || (floor == 0.0 && k - 1 < dim) {
        return Err(Error::NonPositiveFloor);
    }

    if floor == 0.0 {
        // Batch spans the whole shape space: work with the covariance itself.
        let cov = g.transpose() * &g * scale;
        let chol = cov.cholesky().ok_or(Error::NonPositiveFloor)?;
        let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let grad = chol.solve(&g.transpose()).transpose() * scale;
        return Ok(CohortTerm {
            value: 0.5 * log_det,
            gradients: rows(&grad),
        });
    }

    let eig = SymmetricEigen::new(&g * g.transpose() * scale);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let kept = k.min(dim);
    let mut value = 0.0;
    for &i in order.iter().take(kept) {
        value += (eig.eigenvalues[i].max(0.0) + floor).ln();
    }
    value += (dim - kept) as f64 * floor.ln();

    // d/dG = (G G^T scale + floor I)^{-1} G scale
    let inv_diag = eig.eigenvalues.map(|l| 1.0 / (l.max(0.0) + floor));
    let u = &eig.eigenvectors;
    let inverse = u * DMatrix::from_diagonal(&inv_diag) * u.transpose();
    let grad = inverse * &g * scale;
    Ok(CohortTerm {
        value: 0.5 * value,
        gradients: rows(&grad),
    })
}

// ---------------------------------------------------------------------------
// Total

/// Everything the per-shape terms need for one batch member.
#[derive(Clone, Copy, Debug)]
pub struct ShapeInputs<'a> {
    pub points: &'a [Point3<f64>],
    pub grid: &'a SdfGrid,
    pub band: &'a NarrowBand,
    /// Fitted interpolant; required when the sampling weight is positive.
    pub surface: Option<&'a RbfSurface>,
}

/// Weighted objective over a minibatch and its gradient for every particle.
///
/// Cohort terms are skipped (contribute exactly zero) while `mean` is
/// unavailable, when the batch has a single shape, or when their weight is
/// zero.
pub fn total_loss(
    shapes: &[ShapeInputs<'_>],
    mean: Option<&CohortMean>,
    config: &LossConfig,
) -> Result<LossBreakdown> {
    let per_shape: Vec<Result<(f64, f64, Vec<Vector3<f64>>)>> = shapes
        .par_iter()
        .map(|s| {
            let mut grads = vec![Vector3::zeros(); s.points.len()];
            let mut surface = 0.0;
            if config.alpha > 0.0 {
                surface = surface_loss(s.points, s.grid);
                for (g, d) in grads.iter_mut().zip(surface_gradient(s.points, s.grid)) {
                    *g += d * config.alpha;
                }
            }
            let mut sampling = 0.0;
            if config.beta > 0.0 {
                let rbf = s
                    .surface
                    .ok_or_else(|| Error::invalid("sampling loss needs a fitted surface"))?;
                let (v, dg) = sampling_term(s.points, s.band, s.grid, rbf, config.error_pull);
                sampling = v;
                for (g, d) in grads.iter_mut().zip(dg) {
                    *g += d * config.beta;
                }
            }
            Ok((surface, sampling, grads))
        })
        .collect();

    let mut out = LossBreakdown::default();
    for r in per_shape {
        let (surface, sampling, grads) = r?;
        out.surface += surface;
        out.sampling += sampling;
        out.gradients.push(grads);
    }

    if let Some(mean) = mean {
        if shapes.len() >= 2 && config.has_cohort_terms() {
            let flat: Vec<Vec<f64>> = shapes
                .iter()
                .map(|s| s.points.iter().flat_map(|p| [p.x, p.y, p.z]).collect())
                .collect();
            let batch: Vec<&[f64]> = flat.iter().map(Vec::as_slice).collect();
            let mut apply = |term: &CohortTerm, weight: f64| {
                for (grads, row) in out.gradients.iter_mut().zip(&term.gradients) {
                    for (g, c) in grads.iter_mut().zip(row.chunks_exact(3)) {
                        *g += Vector3::new(c[0], c[1], c[2]) * weight;
                    }
                }
            };
            if config.gamma > 0.0 {
                let floor = config
                    .covariance_floor
                    .unwrap_or_else(|| mean.default_covariance_floor());
                let term = eigenshape_term(&batch, mean, floor)?;
                apply(&term, config.gamma);
                out.eigenshape = term.value;
            }
            if config.zeta > 0.0 {
                let term = correspondence_term(&batch, mean)?;
                apply(&term, config.zeta);
                out.correspondence = term.value;
            }
        }
    }

    out.total = config.alpha * out.surface
        + config.beta * out.sampling
        + config.gamma * out.eigenshape
        + config.zeta * out.correspondence;
    Ok(out)
}
