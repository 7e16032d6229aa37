//! Signed-distance voxel grids.
//!
//! A [`SdfGrid`] stores signed distances at voxel centers (negative inside,
//! positive outside) and answers trilinearly interpolated distance and normal
//! queries anywhere in space. Queries outside the voxel-center box are clamped
//! to the box, so the interpolated field is defined everywhere.

use std::fs;
use std::path::Path;

use nalgebra::{Point3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// File magic of the `.sdfgrid` format.
pub const GRID_MAGIC: &[u8; 8] = b"SDFGRID1";

const MAX_HEADER_LEN: usize = 4096;

/// Axis-aligned voxel grid of signed distances.
///
/// Voxel `(i, j, k)` is centered at `origin + (i, j, k) * spacing`. Values are
/// stored in x-fastest order.
#[derive(Clone, Debug, PartialEq)]
pub struct SdfGrid {
    origin: Point3<f64>,
    spacing: Vector3<f64>,
    dims: [usize; 3],
    values: Vec<f32>,
}

impl SdfGrid {
    pub fn new(
        origin: Point3<f64>,
        spacing: Vector3<f64>,
        dims: [usize; 3],
        values: Vec<f32>,
    ) -> Result<Self> {
        if origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::invalid("grid spacing must be positive and finite"));
        }
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid("grid dims must be at least 2 per axis"));
        }
        let count = voxel_count(dims).ok_or_else(|| Error::invalid("grid dims overflow"))?;
        if values.len() != count {
            return Err(Error::invalid(format!(
                "grid expects {count} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid values must be finite"));
        }
        Ok(SdfGrid {
            origin,
            spacing,
            dims,
            values,
        })
    }

    /// Samples `f` at every voxel center.
    pub fn from_fn(
        origin: Point3<f64>,
        spacing: Vector3<f64>,
        dims: [usize; 3],
        f: impl Fn(&Point3<f64>) -> f64,
    ) -> Result<Self> {
        let count = voxel_count(dims).ok_or_else(|| Error::invalid("grid dims overflow"))?;
        let mut values = Vec::with_capacity(count);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = origin
                        + Vector3::new(
                            i as f64 * spacing.x,
                            j as f64 * spacing.y,
                            k as f64 * spacing.z,
                        );
                    values.push(f(&p) as f32);
                }
            }
        }
        SdfGrid::new(origin, spacing, dims, values)
    }

    /// Cubic grid `[-half_extent, half_extent]^3` with `n` voxels per axis.
    pub fn centered_cube(
        half_extent: f64,
        n: usize,
        f: impl Fn(&Point3<f64>) -> f64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("grid dims must be at least 2 per axis"));
        }
        let h = 2.0 * half_extent / (n - 1) as f64;
        SdfGrid::from_fn(
            Point3::new(-half_extent, -half_extent, -half_extent),
            Vector3::new(h, h, h),
            [n, n, n],
            f,
        )
    }

    pub fn origin(&self) -> &Point3<f64> {
        &self.origin
    }

    pub fn spacing(&self) -> &Vector3<f64> {
        &self.spacing
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.min()
    }

    pub fn mean_spacing(&self) -> f64 {
        self.spacing.mean()
    }

    pub fn voxel_diagonal(&self) -> f64 {
        self.spacing.norm()
    }

    /// Corners of the voxel-center bounding box.
    pub fn bounds(&self) -> (Point3<f64>, Point3<f64>) {
        let upper = self.origin
            + Vector3::new(
                (self.dims[0] - 1) as f64 * self.spacing.x,
                (self.dims[1] - 1) as f64 * self.spacing.y,
                (self.dims[2] - 1) as f64 * self.spacing.z,
            );
        (self.origin, upper)
    }

    /// Projects `x` onto the bounding box.
    pub fn clamp(&self, x: &Point3<f64>) -> Point3<f64> {
        let (lo, hi) = self.bounds();
        Point3::new(
            x.x.clamp(lo.x, hi.x),
            x.y.clamp(lo.y, hi.y),
            x.z.clamp(lo.z, hi.z),
        )
    }

    pub fn contains(&self, x: &Point3<f64>) -> bool {
        let (lo, hi) = self.bounds();
        (0..3).all(|a| x[a] >= lo[a] && x[a] <= hi[a])
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn value_at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)] as f64
    }

    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.origin
            + Vector3::new(
                i as f64 * self.spacing.x,
                j as f64 * self.spacing.y,
                k as f64 * self.spacing.z,
            )
    }

    /// Cell index and fractional coordinates of the (clamped) point, plus a
    /// flag per axis telling whether the point lay outside the box.
    fn locate(&self, x: &Point3<f64>) -> ([usize; 3], [f64; 3], [bool; 3]) {
        let mut cell = [0usize; 3];
        let mut frac = [0.0; 3];
        let mut clamped = [false; 3];
        for a in 0..3 {
            let upper = (self.dims[a] - 1) as f64;
            let mut t = (x[a] - self.origin[a]) / self.spacing[a];
            if !(0.0..=upper).contains(&t) {
                clamped[a] = true;
                t = if t.is_nan() { 0.0 } else { t.clamp(0.0, upper) };
            }
            let i0 = (t.floor() as usize).min(self.dims[a] - 2);
            cell[a] = i0;
            frac[a] = t - i0 as f64;
        }
        (cell, frac, clamped)
    }

    /// Trilinearly interpolated signed distance.
    pub fn distance(&self, x: &Point3<f64>) -> f64 {
        let ([i, j, k], [fx, fy, fz], _) = self.locate(x);
        let c000 = self.value_at(i, j, k);
        let c100 = self.value_at(i + 1, j, k);
        let c010 = self.value_at(i, j + 1, k);
        let c110 = self.value_at(i + 1, j + 1, k);
        let c001 = self.value_at(i, j, k + 1);
        let c101 = self.value_at(i + 1, j, k + 1);
        let c011 = self.value_at(i, j + 1, k + 1);
        let c111 = self.value_at(i + 1, j + 1, k + 1);
        let c00 = c000 + fx * (c100 - c000);
        let c10 = c010 + fx * (c110 - c010);
        let c01 = c001 + fx * (c101 - c001);
        let c11 = c011 + fx * (c111 - c011);
        let c0 = c00 + fy * (c10 - c00);
        let c1 = c01 + fy * (c11 - c01);
        c0 + fz * (c1 - c0)
    }

    /// Interpolated distance together with the exact gradient of the
    /// trilinear interpolant. Clamped axes have zero gradient.
    pub fn distance_and_gradient(&self, x: &Point3<f64>) -> (f64, Vector3<f64>) {
        let ([i, j, k], [fx, fy, fz], clamped) = self.locate(x);
        let c = |di: usize, dj: usize, dk: usize| self.value_at(i + di, j + dj, k + dk);
        let (c000, c100, c010, c110) = (c(0, 0, 0), c(1, 0, 0), c(0, 1, 0), c(1, 1, 0));
        let (c001, c101, c011, c111) = (c(0, 0, 1), c(1, 0, 1), c(0, 1, 1), c(1, 1, 1));

        let c00 = c000 + fx * (c100 - c000);
        let c10 = c010 + fx * (c110 - c010);
        let c01 = c001 + fx * (c101 - c001);
        let c11 = c011 + fx * (c111 - c011);
        let c0 = c00 + fy * (c10 - c00);
        let c1 = c01 + fy * (c11 - c01);
        let value = c0 + fz * (c1 - c0);

        let dz = c1 - c0;
        let dy = (1.0 - fz) * (c10 - c00) + fz * (c11 - c01);
        let dx0 = (1.0 - fy) * (c100 - c000) + fy * (c110 - c010);
        let dx1 = (1.0 - fy) * (c101 - c001) + fy * (c111 - c011);
        let dx = (1.0 - fz) * dx0 + fz * dx1;

        let mut grad = Vector3::new(
            dx / self.spacing.x,
            dy / self.spacing.y,
            dz / self.spacing.z,
        );
        for a in 0..3 {
            if clamped[a] {
                grad[a] = 0.0;
            }
        }
        (value, grad)
    }

    /// Outward unit normal from a central-difference gradient with a step of
    /// one voxel per axis.
    pub fn normal(&self, x: &Point3<f64>) -> Result<Unit<Vector3<f64>>> {
        let mut g = Vector3::zeros();
        for a in 0..3 {
            let mut step = Vector3::zeros();
            step[a] = self.spacing[a];
            g[a] = (self.distance(&(x + step)) - self.distance(&(x - step))) / (2.0 * self.spacing[a]);
        }
        let norm = g.norm();
        if !(norm > 1e-8) {
            return Err(Error::DegenerateGradient(x.x, x.y, x.z));
        }
        Ok(Unit::new_unchecked(g / norm))
    }

    /// Moves `x` towards the zero level set with up to `steps` Newton-like
    /// updates `x <- x - D(x) n(x)`.
    pub fn project_to_surface(&self, x: &Point3<f64>, steps: usize) -> Point3<f64> {
        let mut p = self.clamp(x);
        for _ in 0..steps {
            let d = self.distance(&p);
            let Ok(n) = self.normal(&p) else { break };
            p = self.clamp(&(p - n.into_inner() * d));
        }
        p
    }

    /// Parses the binary `.sdfgrid` representation.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let rest = bytes
            .strip_prefix(GRID_MAGIC.as_slice())
            .ok_or_else(|| Error::Format("bad magic".into()))?;
        let newline = rest
            .iter()
            .take(MAX_HEADER_LEN)
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing header line".into()))?;
        let header = std::str::from_utf8(&rest[..newline])
            .map_err(|_| Error::Format("header is not UTF-8".into()))?;
        let (dims, origin, spacing) = parse_header(header)?;
        let count =
            voxel_count(dims).ok_or_else(|| Error::Format("dims overflow".into()))?;
        let payload = &rest[newline + 1..];
        if Some(payload.len()) != count.checked_mul(4) {
            return Err(Error::Format(format!(
                "payload holds {} bytes, header dims require {} values",
                payload.len(),
                count
            )));
        }
        let values = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        SdfGrid::new(origin, spacing, dims, values).map_err(|e| match e {
            Error::Invalid(msg) => Error::Format(msg),
            other => other,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "dims={} {} {};origin={} {} {};spacing={} {} {}\n",
            self.dims[0],
            self.dims[1],
            self.dims[2],
            self.origin.x,
            self.origin.y,
            self.origin.z,
            self.spacing.x,
            self.spacing.y,
            self.spacing.z
        );
        let mut out = Vec::with_capacity(GRID_MAGIC.len() + header.len() + 4 * self.values.len());
        out.extend_from_slice(GRID_MAGIC);
        out.extend_from_slice(header.as_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        SdfGrid::from_bytes(&bytes).map_err(|e| match e {
            Error::Format(message) => Error::FormatAt {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn voxel_count(dims: [usize; 3]) -> Option<usize> {
    dims[0].checked_mul(dims[1])?.checked_mul(dims[2])
}

fn parse_triple<T: std::str::FromStr>(s: &str, key: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = s.split(' ').collect();
    if parts.len() != 3 {
        return Err(Error::Format(format!("`{key}` needs three values")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<T>()
                .map_err(|_| Error::Format(format!("bad number `{p}` in `{key}`")))?,
        );
    }
    out.try_into()
        .map_err(|_| Error::Format(format!("`{key}` needs three values")))
}

type Header = ([usize; 3], Point3<f64>, Vector3<f64>);

fn parse_header(header: &str) -> Result<Header> {
    let mut dims = None;
    let mut origin = None;
    let mut spacing = None;
    for field in header.split(';') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("malformed header field `{field}`")))?;
        let slot_taken = match key {
            "dims" => dims.replace(parse_triple::<usize>(value, key)?).is_some(),
            "origin" => origin.replace(parse_triple::<f64>(value, key)?).is_some(),
            "spacing" => spacing.replace(parse_triple::<f64>(value, key)?).is_some(),
            _ => return Err(Error::Format(format!("unknown header key `{key}`"))),
        };
        if slot_taken {
            return Err(Error::Format(format!("duplicate header key `{key}`")));
        }
    }
    match (dims, origin, spacing) {
        (Some(d), Some(o), Some(s)) => Ok((d, Point3::from(o), Vector3::from(s))),
        _ => Err(Error::Format("header must define dims, origin and spacing".into())),
    }
}

/// Points sampled from the shell `|D| <= half_width` around a surface.
#[derive(Clone, Debug, PartialEq)]
pub struct NarrowBand {
    pub points: Vec<Point3<f64>>,
    pub half_width: f64,
}

/// Voxel-anchored narrow-band sampler. Building it scans the grid once; each
/// call to [`BandSampler::sample`] is then O(R).
#[derive(Clone, Debug)]
pub struct BandSampler<'a> {
    grid: &'a SdfGrid,
    half_width: f64,
    voxels: Vec<[usize; 3]>,
}

impl<'a> BandSampler<'a> {
    pub fn new(grid: &'a SdfGrid, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidBand(half_width));
        }
        let [nx, ny, nz] = grid.dims;
        let mut voxels = Vec::new();
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if grid.value_at(i, j, k).abs() <= half_width {
                        voxels.push([i, j, k]);
                    }
                }
            }
        }
        if voxels.is_empty() {
            return Err(Error::EmptyBand(half_width));
        }
        Ok(BandSampler {
            grid,
            half_width,
            voxels,
        })
    }

    pub fn voxel_count(&self) -> usize {
        self.voxels.len()
    }

    /// Draws `count` band voxels uniformly with replacement and jitters each
    /// sample uniformly inside its voxel.
    pub fn sample(&self, count: usize, seed: u64) -> NarrowBand {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.grid.spacing;
        let points = (0..count)
            .map(|_| {
                let [i, j, k] = self.voxels[rng.random_range(0..self.voxels.len())];
                let jitter = Vector3::new(
                    (rng.random::<f64>() - 0.5) * h.x,
                    (rng.random::<f64>() - 0.5) * h.y,
                    (rng.random::<f64>() - 0.5) * h.z,
                );
                self.grid.clamp(&(self.grid.voxel_center(i, j, k) + jitter))
            })
            .collect();
        NarrowBand {
            points,
            half_width: self.half_width,
        }
    }
}

/// Samples `count` narrow-band points of half-width `half_width`.
pub fn sample_narrow_band(
    grid: &SdfGrid,
    half_width: f64,
    count: usize,
    seed: u64,
) -> Result<NarrowBand> {
    if count == 0 {
        return Err(Error::invalid("band sample count must be at least 1"));
    }
    Ok(BandSampler::new(grid, half_width)?.sample(count, seed))
}

/// Approximate signed distance to an axis-aligned ellipsoid centered at the
/// origin: the scaled-sphere field `(|x / a| - 1) * min(a)`. Exact for spheres.
pub fn ellipsoid_distance(x: &Point3<f64>, semi_axes: &Vector3<f64>) -> f64 {
    let scaled = x.coords.component_div(semi_axes);
    (scaled.norm() - 1.0) * semi_axes.min()
}

/// A synthetic family of ellipsoids sharing one world frame.
#[derive(Clone, Debug)]
pub struct EllipsoidCohort {
    pub semi_axes: Vec<Vector3<f64>>,
    pub grids: Vec<SdfGrid>,
}

/// Ellipsoids whose x semi-axis is linearly spaced over `x_range` while the y
/// and z semi-axes stay at `fixed_axes`. All grids share the cube
/// `[-H, H]^3` with `H = 1.25 * (largest semi-axis)`.
pub fn make_ellipsoid_cohort(
    count: usize,
    x_range: (f64, f64),
    fixed_axes: (f64, f64),
    dims: [usize; 3],
) -> Result<EllipsoidCohort> {
    if count < 2 {
        return Err(Error::invalid("ellipsoid cohort needs at least 2 shapes"));
    }
    let (lo, hi) = x_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid(format!("invalid x-axis range ({lo}, {hi})")));
    }
    if !(fixed_axes.0 > 0.0 && fixed_axes.1 > 0.0) {
        return Err(Error::invalid("fixed semi-axes must be positive"));
    }
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::invalid("grid dims must be at least 2 per axis"));
    }
    let half = 1.25 * hi.max(fixed_axes.0).max(fixed_axes.1);
    let spacing = Vector3::new(
        2.0 * half / (dims[0] - 1) as f64,
        2.0 * half / (dims[1] - 1) as f64,
        2.0 * half / (dims[2] - 1) as f64,
    );
    let min_axis = 2.0 * spacing.max();
    for axis in [lo, fixed_axes.0, fixed_axes.1] {
        if axis <= min_axis {
            return Err(Error::InvalidAxis {
                axis,
                min: min_axis,
            });
        }
    }
    let origin = Point3::new(-half, -half, -half);
    let mut semi_axes = Vec::with_capacity(count);
    let mut grids = Vec::with_capacity(count);
    for n in 0..count {
        let t = n as f64 / (count - 1) as f64;
        let axes = Vector3::new(lo + t * (hi - lo), fixed_axes.0, fixed_axes.1);
        grids.push(SdfGrid::from_fn(origin, spacing, dims, |p| {
            ellipsoid_distance(p, &axes)
        })?);
        semi_axes.push(axes);
    }
    Ok(EllipsoidCohort { semi_axes, grids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sphere(n: usize) -> SdfGrid {
        SdfGrid::centered_cube(2.5, n, |p| p.coords.norm() - 1.0).unwrap()
    }

    #[test]
    fn constant_field_interpolates_constant() {
        let g = SdfGrid::centered_cube(1.0, 5, |_| 0.7).unwrap();
        for p in [
            Point3::new(0.1, -0.3, 0.77),
            Point3::new(5.0, 5.0, 5.0),
            Point3::origin(),
        ] {
            assert_relative_eq!(g.distance(&p), 0.7f32 as f64);
        }
    }

    #[test]
    fn sphere_distance_outside() {
        let g = sphere(81);
        let d = g.distance(&Point3::new(2.0, 0.0, 0.0));
        assert!((d - 1.0).abs() <= g.min_spacing());
    }

    #[test]
    fn linear_interpolation_midpoint() {
        let g = SdfGrid::from_fn(
            Point3::origin(),
            Vector3::new(1.0, 1.0, 1.0),
            [2, 2, 2],
            |p| p.x,
        )
        .unwrap();
        assert_relative_eq!(g.distance(&Point3::new(0.5, 0.0, 0.0)), 0.5);
    }

    #[test]
    fn exact_at_voxel_centers() {
        let g = sphere(17);
        for (i, j, k) in [(0, 0, 0), (3, 7, 11), (16, 16, 16), (8, 8, 8)] {
            assert_eq!(g.distance(&g.voxel_center(i, j, k)), g.value_at(i, j, k));
        }
    }

    #[test]
    fn normals() {
        let g = sphere(81);
        let n = g.normal(&Point3::new(2.0, 0.0, 0.0)).unwrap();
        assert!((n.into_inner() - Vector3::x()).norm() < 1e-3);

        let plane = SdfGrid::centered_cube(1.0, 9, |p| p.z).unwrap();
        let n = plane.normal(&Point3::new(0.3, -0.2, 0.1)).unwrap();
        assert!((n.into_inner() - Vector3::z()).norm() < 1e-12);

        let flat = SdfGrid::centered_cube(1.0, 9, |_| 0.3).unwrap();
        assert!(matches!(
            flat.normal(&Point3::origin()),
            Err(Error::DegenerateGradient(..))
        ));
    }

    #[test]
    fn gradient_zero_on_clamped_axes() {
        let plane = SdfGrid::centered_cube(1.0, 9, |p| p.x + p.z).unwrap();
        let (_, g) = plane.distance_and_gradient(&Point3::new(3.0, 0.0, 0.2));
        assert_eq!(g.x, 0.0);
        assert_relative_eq!(g.z, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn band_sampling() {
        let g = sphere(41);
        let band = sample_narrow_band(&g, 0.1, 100, 3).unwrap();
        assert_eq!(band.points.len(), 100);
        for p in &band.points {
            assert!(g.distance(p).abs() <= 0.1 + g.voxel_diagonal());
        }
        assert_eq!(band, sample_narrow_band(&g, 0.1, 100, 3).unwrap());
        assert_ne!(band, sample_narrow_band(&g, 0.1, 100, 4).unwrap());
    }

    #[test]
    fn empty_band() {
        // Coarse grid whose voxel centers all sit far from the surface.
        let g = SdfGrid::centered_cube(2.0, 3, |p| p.coords.norm() - 1.0).unwrap();
        assert!(matches!(
            sample_narrow_band(&g, 0.05, 10, 0),
            Err(Error::EmptyBand(_))
        ));
    }

    #[test]
    fn ellipsoid_cohort_preconditions() {
        assert!(make_ellipsoid_cohort(1, (1.0, 2.0), (0.5, 0.5), [32; 3]).is_err());
        assert!(matches!(
            make_ellipsoid_cohort(4, (1.0, 2.0), (0.05, 0.5), [32; 3]),
            Err(Error::InvalidAxis { .. })
        ));
    }

    #[test]
    fn ellipsoid_sphere_case_is_exact() {
        let c = make_ellipsoid_cohort(2, (1.0, 1.0), (1.0, 1.0), [41; 3]).unwrap();
        let g = &c.grids[0];
        assert!(g.distance(&Point3::new(1.0, 0.0, 0.0)).abs() <= g.min_spacing());
    }

    #[test]
    fn bytes_roundtrip_and_errors() {
        let g = sphere(9);
        let bytes = g.to_bytes();
        assert_eq!(SdfGrid::from_bytes(&bytes).unwrap(), g);
        assert!(matches!(
            SdfGrid::from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
        let mut wrong = bytes.clone();
        wrong[..8].copy_from_slice(b"SDFGRID2");
        assert!(matches!(SdfGrid::from_bytes(&wrong), Err(Error::Format(_))));
        let header = b"SDFGRID1dims=2 2 3;origin=0 0 0;spacing=1 1 1\n";
        let mut short = header.to_vec();
        short.extend(std::iter::repeat_n(0u8, 4 * 8));
        assert!(matches!(SdfGrid::from_bytes(&short), Err(Error::Format(_))));
    }
}
