use nalgebra::{Point3, Unit, Vector3};

use crate::error::{Error, Result};

/// Minimum number of control points per shape; the linear polynomial part of
/// the interpolant has four coefficients.
pub const MIN_PARTICLES: usize = 4;

/// Two sites closer than this are treated as coincident.
pub const DUPLICATE_TOLERANCE: f64 = 1e-9;

/// Control points and outward unit normals of one shape.
///
/// Index `j` identifies the same (corresponding) particle on every shape of a
/// cohort.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSystem {
    points: Vec<Point3<f64>>,
    normals: Vec<Unit<Vector3<f64>>>,
    pub shape_id: usize,
}

impl ParticleSystem {
    pub fn new(
        points: Vec<Point3<f64>>,
        normals: Vec<Unit<Vector3<f64>>>,
        shape_id: usize,
    ) -> Result<Self> {
        if points.len() != normals.len() {
            return Err(Error::invalid(format!(
                "{} points but {} normals",
                points.len(),
                normals.len()
            )));
        }
        if points.len() < MIN_PARTICLES {
            return Err(Error::invalid(format!(
                "need at least {MIN_PARTICLES} particles, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::invalid("particle coordinates must be finite"));
        }
        for (i, n) in normals.iter().enumerate() {
            if (n.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("normal {i} is not unit length")));
            }
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if (points[i] - points[j]).norm() <= DUPLICATE_TOLERANCE {
                    return Err(Error::DuplicateSite(i, j));
                }
            }
        }
        Ok(ParticleSystem {
            points,
            normals,
            shape_id,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn normals(&self) -> &[Unit<Vector3<f64>>] {
        &self.normals
    }

    pub(crate) fn points_mut(&mut self) -> &mut [Point3<f64>] {
        &mut self.points
    }

    pub(crate) fn normals_mut(&mut self) -> &mut [Unit<Vector3<f64>>] {
        &mut self.normals
    }

    /// Flattened `[x0, y0, z0, x1, ...]` coordinate vector.
    pub fn flattened(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    /// Exchanges particles `a` and `b` (positions and normals).
    pub fn swap(&mut self, a: usize, b: usize) {
        self.points.swap(a, b);
        self.normals.swap(a, b);
    }

    pub fn with_shape_id(mut self, shape_id: usize) -> Self {
        self.shape_id = shape_id;
        self
    }
}

/// Control points together with their off-surface offsets.
///
/// Site `3j` is control point `j` (value 0), site `3j + 1` lies at
/// `p_j + s n_j` (value `+s`), site `3j + 2` at `p_j - s n_j` (value `-s`).
#[derive(Clone, Debug, PartialEq)]
pub struct DipoleSet {
    pub sites: Vec<Point3<f64>>,
    pub values: Vec<f64>,
    pub offset: f64,
}

impl DipoleSet {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn control_point_count(&self) -> usize {
        self.sites.len() / 3
    }
}

pub fn build_dipoles(points: &[Point3<f64>], normals: &[Unit<Vector3<f64>>], offset: f64) -> Result<DipoleSet> {
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::InvalidBand(offset));
    }
    if points.len() != normals.len() {
        return Err(Error::invalid("points and normals differ in length"));
    }
    let mut sites = Vec::with_capacity(3 * points.len());
    let mut values = Vec::with_capacity(3 * points.len());
    for (p, n) in points.iter().zip(normals) {
        sites.push(*p);
        sites.push(p + n.as_ref() * offset);
        sites.push(p - n.as_ref() * offset);
        values.extend_from_slice(&[0.0, offset, -offset]);
    }
    let tol2 = DUPLICATE_TOLERANCE * DUPLICATE_TOLERANCE;
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            if (sites[i] - sites[j]).norm_squared() <= tol2 {
                return Err(Error::DuplicateSite(i, j));
            }
        }
    }
    Ok(DipoleSet {
        sites,
        values,
        offset,
    })
}

impl ParticleSystem {
    pub fn dipoles(&self, offset: f64) -> Result<DipoleSet> {
        build_dipoles(&self.points, &self.normals, offset)
    }
}
