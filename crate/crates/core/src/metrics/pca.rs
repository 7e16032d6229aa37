use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative eigenvalue threshold below which no mode vector is formed.
const MODE_TOLERANCE: f64 = 1e-10;

/// PCA of flattened particle vectors.
///
/// `eigenvalues` holds the `min(I - 1, 3J)` covariance eigenvalues in
/// descending order; `modes` holds orthonormal directions for the leading
/// numerically non-zero ones.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeModel {
    pub mean: Vec<f64>,
    pub modes: Vec<DVector<f64>>,
    pub eigenvalues: Vec<f64>,
    pub training_size: usize,
}

fn as_matrix(vectors: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let dim = vectors.first().map(Vec::len).unwrap_or(0);
    if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("shape vectors must be non-empty and of equal length"));
    }
    Ok(DMatrix::from_fn(vectors.len(), dim, |i, d| vectors[i][d]))
}

/// Eigen-decomposition of the sample covariance through the `I x I` Gram
/// matrix of centered shape vectors.
pub fn pca_fit(vectors: &[Vec<f64>]) -> Result<ShapeModel> {
    let count = vectors.len();
    if count < 2 {
        return Err(Error::DegenerateCohort(count));
    }
    let mut x = as_matrix(vectors)?;
    let dim = x.ncols();
    let mean: Vec<f64> = (0..dim).map(|d| x.column(d).mean()).collect();
    for d in 0..dim {
        x.column_mut(d).add_scalar_mut(-mean[d]);
    }
    let denom = (count - 1) as f64;
    let eig = SymmetricEigen::new(&x * x.transpose() / denom);
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate((count - 1).min(dim));

    // Centering identical rows leaves deviations of a few ulps; variance at
    // that level is rounding, not shape.
    let scale = vectors.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = (8.0 * f64::EPSILON * scale).powi(2) * dim as f64;
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| eig.eigenvalues[i])
        .map(|l| if l > noise { l } else { 0.0 })
        .collect();
    let largest = eigenvalues.first().copied().unwrap_or(0.0);
    let mut modes: Vec<DVector<f64>> = Vec::new();
    for (&i, &lambda) in order.iter().zip(&eigenvalues) {
        if !(lambda > MODE_TOLERANCE * largest) || largest == 0.0 {
            break;
        }
        let mut v = x.transpose() * eig.eigenvectors.column(i);
        // Re-orthogonalize against the leading modes.
        for m in &modes {
            let c = m.dot(&v);
            v.axpy(-c, m, 1.0);
        }
        let norm = v.norm();
        if norm == 0.0 {
            break;
        }
        modes.push(v / norm);
    }
    Ok(ShapeModel {
        mean,
        modes,
        eigenvalues,
        training_size: count,
    })
}

impl ShapeModel {
    pub fn mode_count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Mean plus the top `modes` principal directions applied to `x`.
    pub fn reconstruct(&self, x: &[f64], modes: usize) -> Vec<f64> {
        let mean = DVector::from_column_slice(&self.mean);
        let centered = DVector::from_column_slice(x) - &mean;
        let mut out = mean;
        for m in self.modes.iter().take(modes) {
            out.axpy(m.dot(&centered), m, 1.0);
        }
        out.iter().copied().collect()
    }

    /// `mean + sum_m z_m sqrt(lambda_m) mode_m` over the first `modes` modes.
    pub fn synthesize(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = DVector::from_column_slice(&self.mean);
        for ((m, lambda), z) in self.modes.iter().zip(&self.eigenvalues).zip(coefficients) {
            out.axpy(z * lambda.sqrt(), m, 1.0);
        }
        out.iter().copied().collect()
    }
}

/// Mean Euclidean distance between corresponding particles of two flattened
/// shape vectors.
pub fn mean_particle_distance(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 3;
    if n == 0 {
        return 0.0;
    }
    a.chunks_exact(3)
        .zip(b.chunks_exact(3))
        .map(|(p, q)| {
            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
        .sum::<f64>()
        / n as f64
}

/// Fraction of total variance captured by the first `modes` modes.
pub fn compactness(model: &ShapeModel, modes: usize) -> Result<f64> {
    if modes == 0 || modes > model.mode_count() {
        return Err(Error::invalid(format!(
            "mode count {modes} outside 1..={}",
            model.mode_count()
        )));
    }
    let total = model.total_variance();
    if !(total > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(model.eigenvalues[..modes].iter().sum::<f64>() / total)
}

/// Average distance from shapes drawn from the model's Gaussian (first
/// `modes` modes) to their nearest training shape.
pub fn specificity(
    model: &ShapeModel,
    training: &[Vec<f64>],
    modes: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::invalid("specificity needs at least one sample"));
    }
    if training.is_empty() {
        return Err(Error::DegenerateCohort(0));
    }
    let used = modes.min(model.modes.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..samples {
        let z: Vec<f64> = (0..used).map(|_| StandardNormal.sample(&mut rng)).collect();
        let shape = model.synthesize(&z);
        total += training
            .iter()
            .map(|t| mean_particle_distance(&shape, t))
            .fold(f64::INFINITY, f64::min);
    }
    Ok(total / samples as f64)
}

/// Leave-one-out reconstruction error of held-out shapes using `modes`
/// modes of a model refit without them.
pub fn generalization(vectors: &[Vec<f64>], modes: usize) -> Result<f64> {
    let count = vectors.len();
    if count < 3 {
        return Err(Error::DegenerateCohort(count));
    }
    let mut total = 0.0;
    for held in 0..count {
        let rest: Vec<Vec<f64>> = vectors
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != held)
            .map(|(_, v)| v.clone())
            .collect();
        let model = pca_fit(&rest)?;
        let recon = model.reconstruct(&vectors[held], modes);
        total += mean_particle_distance(&recon, &vectors[held]);
    }
    Ok(total / count as f64)
}
