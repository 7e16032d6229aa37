use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Point3, Unit, Vector3};

use crate::error::{Error, Result};
use crate::rbf::ParticleSystem;

/// Renders one `x y z nx ny nz` line per particle with 17 significant
/// digits, enough for an exact round trip of every `f64`.
pub fn format_particles(ps: &ParticleSystem) -> String {
    let mut out = String::with_capacity(ps.len() * 150);
    for (p, n) in ps.points().iter().zip(ps.normals()) {
        let _ = writeln!(
            out,
            "{:.16e} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
            p.x, p.y, p.z, n.x, n.y, n.z
        );
    }
    out
}

/// Parses the text written by [`format_particles`]. Blank lines and lines
/// starting with `#` are skipped; normals must already be unit length.
pub fn parse_particles(text: &str, shape_id: usize) -> Result<ParticleSystem> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Format(format!(
                "line {line_no}: expected 6 fields, found {}",
                fields.len()
            )));
        }
        let mut v = [0.0f64; 6];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|_| Error::Format(format!("line {line_no}: bad number {field:?}")))?;
            if !slot.is_finite() {
                return Err(Error::Format(format!("line {line_no}: non-finite value")));
            }
        }
        let n = Vector3::new(v[3], v[4], v[5]);
        if (n.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::Format(format!("line {line_no}: normal is not unit length")));
        }
        points.push(Point3::new(v[0], v[1], v[2]));
        normals.push(Unit::new_unchecked(n));
    }
    if points.is_empty() {
        return Err(Error::Format("no particles".into()));
    }
    ParticleSystem::new(points, normals, shape_id).map_err(|e| match e {
        Error::Invalid(msg) => Error::Format(msg),
        Error::DuplicateSite(a, b) => {
            Error::Format(format!("lines {} and {} hold the same point", a + 1, b + 1))
        }
        other => other,
    })
}

pub fn load_particles(path: impl AsRef<Path>, shape_id: usize) -> Result<ParticleSystem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_particles(&text, shape_id).map_err(|e| match e {
        Error::Format(message) => Error::FormatAt {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn save_particles(path: impl AsRef<Path>, ps: &ParticleSystem) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_particles(ps)).map_err(|e| Error::io(path, e))
}
