//! Polyharmonic RBF implicit surface fitted to dipole sites.
//!
//! The interpolant is `f(x) = sum_k w_k phi(|x - x_k|) + c . x + c0`. Weights
//! and polynomial coefficients solve the saddle-point system
//!
//! ```text
//! [ Phi + ridge*I   Q ] [ w ]   [ v ]
//! [ Q^T             0 ] [ c ] = [ 0 ]
//! ```
//!
//! with `Q = [1 | x_k]`. The LU factorization is kept so that gradients with
//! respect to site positions can be back-propagated through the solve with a
//! single extra substitution.

use nalgebra::{DMatrix, DVector, Point3, Vector3, LU};
use rayon::prelude::*;

use super::kernel::Kernel;
use super::marching_cubes;
use super::particles::DipoleSet;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::sdf_grid::{NarrowBand, SdfGrid};

/// Largest supported control-point count; bounds the dense system at
/// `3 * 512 + 4` unknowns.
pub const MAX_CONTROL_POINTS: usize = 512;

pub const MAX_SYSTEM_SIZE: usize = 3 * MAX_CONTROL_POINTS + 4;

const PIVOT_RATIO_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct RbfSurface {
    dipoles: DipoleSet,
    kernel: Kernel,
    weights: DVector<f64>,
    linear: Vector3<f64>,
    constant: f64,
    ridge: f64,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl RbfSurface {
    /// Solves for the interpolant through `dipoles`.
    pub fn fit(dipoles: DipoleSet, kernel: Kernel, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::invalid(format!("ridge must be non-negative, got {ridge}")));
        }
        let n = dipoles.len();
        let size = n + 4;
        if size > MAX_SYSTEM_SIZE {
            return Err(Error::SystemTooLarge {
                size,
                max: MAX_SYSTEM_SIZE,
            });
        }
        let sites = &dipoles.sites;
        let mut a = DMatrix::<f64>::zeros(size, size);
        for i in 0..n {
            for j in i + 1..n {
                let v = kernel.eval(&sites[i], &sites[j]);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
            a[(i, i)] = kernel.radial(0.0) + ridge;
            a[(i, n)] = 1.0;
            a[(n, i)] = 1.0;
            for d in 0..3 {
                a[(i, n + 1 + d)] = sites[i][d];
                a[(n + 1 + d, i)] = sites[i][d];
            }
        }
        let mut rhs = DVector::<f64>::zeros(size);
        rhs.rows_mut(0, n).copy_from_slice(&dipoles.values);

        let lu = a.lu();
        let diag = lu.u().diagonal().abs();
        let (lo, hi) = (diag.min(), diag.max());
        if !(hi > 0.0 && lo / hi > PIVOT_RATIO_FLOOR) {
            return Err(Error::SingularSystem { size });
        }
        let sol = lu.solve(&rhs).ok_or(Error::SingularSystem { size })?;
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { size });
        }
        Ok(RbfSurface {
            weights: sol.rows(0, n).into_owned(),
            constant: sol[n],
            linear: Vector3::new(sol[n + 1], sol[n + 2], sol[n + 3]),
            dipoles,
            kernel,
            ridge,
            lu,
        })
    }

    pub fn dipoles(&self) -> &DipoleSet {
        &self.dipoles
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn linear(&self) -> &Vector3<f64> {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn evaluate(&self, x: &Point3<f64>) -> f64 {
        let radial: f64 = self
            .dipoles
            .sites
            .iter()
            .zip(self.weights.iter())
            .map(|(s, w)| w * self.kernel.eval(x, s))
            .sum();
        radial + self.linear.dot(&x.coords) + self.constant
    }

    /// Largest `|f(site) - value|` over all dipole sites.
    pub fn max_residual(&self) -> f64 {
        self.dipoles
            .sites
            .iter()
            .zip(&self.dipoles.values)
            .map(|(s, v)| (self.evaluate(s) - v).abs())
            .fold(0.0, f64::max)
    }

    /// `(|sum w|, max_axis |sum w x|)`; both vanish for an exact solve.
    pub fn side_condition_residuals(&self) -> (f64, f64) {
        let sum: f64 = self.weights.iter().sum();
        let mut moment = Vector3::zeros();
        for (s, w) in self.dipoles.sites.iter().zip(self.weights.iter()) {
            moment += s.coords * *w;
        }
        (sum.abs(), moment.amax())
    }

    /// Squared difference between the interpolant and the grid distance at
    /// each band point.
    pub fn band_error(&self, band: &NarrowBand, grid: &SdfGrid) -> Vec<f64> {
        band.points
            .iter()
            .map(|b| {
                let r = self.evaluate(b) - grid.distance(b);
                r * r
            })
            .collect()
    }

    /// Gradient of `G = sum_r seeds[r] * f(points[r])` with respect to every
    /// dipole site, including the dependence of the solved coefficients on
    /// the sites (adjoint of the linear solve).
    pub fn site_gradients(&self, points: &[Point3<f64>], seeds: &[f64]) -> Vec<Vector3<f64>> {
        debug_assert_eq!(points.len(), seeds.len());
        let sites = &self.dipoles.sites;
        let n = sites.len();
        let kernel = self.kernel;

        // dG/da and the explicit site dependence of f(b_r).
        let mut g = DVector::<f64>::zeros(n + 4);
        let mut grads = vec![Vector3::zeros(); n];
        for (b, &u) in points.iter().zip(seeds) {
            if u == 0.0 {
                continue;
            }
            g[n] += u;
            for d in 0..3 {
                g[n + 1 + d] += u * b[d];
            }
            for k in 0..n {
                let diff = sites[k] - b;
                let r = diff.norm();
                g[k] += u * kernel.radial(r);
                grads[k] += diff * (u * self.weights[k] * kernel.gradient_factor(r));
            }
        }

        // eta = A^{-T} g; A is symmetric.
        let eta = self
            .lu
            .solve(&g)
            .expect("factorization was validated at fit time");
        let eta_lin = Vector3::new(eta[n + 1], eta[n + 2], eta[n + 3]);
        let w = &self.weights;

        // dG = -eta^T (dA) a
        for k in 0..n {
            let mut acc = eta[k] * self.linear + w[k] * eta_lin;
            for l in 0..n {
                if l == k {
                    continue;
                }
                let diff = sites[k] - sites[l];
                let factor = kernel.gradient_factor(diff.norm());
                acc += diff * ((eta[k] * w[l] + eta[l] * w[k]) * factor);
            }
            grads[k] -= acc;
        }
        grads
    }

    /// Triangulates the zero level set on a regular lattice spanning
    /// `[lower, upper]` with `resolution` samples per axis.
    pub fn extract_mesh(
        &self,
        lower: &Point3<f64>,
        upper: &Point3<f64>,
        resolution: [usize; 3],
    ) -> Result<TriMesh> {
        let lattice = marching_cubes::Lattice::new(*lower, *upper, resolution)?;
        let values: Vec<f64> = (0..lattice.len())
            .into_par_iter()
            .map(|idx| self.evaluate(&lattice.point_at(idx)))
            .collect();
        marching_cubes::extract(&lattice, &values, 0.0)
    }
}
