use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::SurfaceDistance;
use crate::optimizer::EpochRecord;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::FormatAt {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `epoch,surface,sampling,eigenshape,correspondence,total`.
pub fn write_history(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    write_rows(path.as_ref(), history)
}

/// One row of a model manifest: which grid a particle file belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub shape_id: usize,
    pub grid: PathBuf,
    pub particles: PathBuf,
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    write_rows(path.as_ref(), entries)
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Reads a manifest; relative paths are taken relative to its directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = parse_manifest(&text).map_err(|e| match e {
        Error::Format(message) => Error::FormatAt {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    for e in &mut entries {
        for p in [&mut e.grid, &mut e.particles] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(entries)
}

#[derive(Serialize)]
struct AxesRow<'a> {
    file: &'a str,
    a: f64,
    b: f64,
    c: f64,
}

/// Writes `file,a,b,c` for a generated ellipsoid cohort.
pub fn write_axes_manifest(path: impl AsRef<Path>, files: &[String], axes: &[Vector3<f64>]) -> Result<()> {
    write_rows(
        path.as_ref(),
        files.iter().zip(axes).map(|(file, a)| AxesRow {
            file,
            a: a.x,
            b: a.y,
            c: a.z,
        }),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReportRow {
    Metric {
        name: &'static str,
        modes: usize,
        value: f64,
    },
    Warning {
        modes: usize,
        message: &'static str,
    },
    Error {
        modes: usize,
        message: &'static str,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeDistance {
    pub shape_id: usize,
    pub distance: SurfaceDistance,
}

/// Contents of a metrics CSV: `metric,mode_count,value` rows followed by
/// `distance,shape_id,mean,max` rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
    pub distances: Vec<ShapeDistance>,
}

impl MetricsReport {
    pub fn value(&self, metric: &str, modes: usize) -> Option<f64> {
        self.rows.iter().find_map(|r| match r {
            ReportRow::Metric { name, modes: m, value } if *name == metric && *m == modes => Some(*value),
            _ => None,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,mode_count,value\n");
        for r in &self.rows {
            let line = match r {
                ReportRow::Metric { name, modes, value } => format!("{name},{modes},{value}"),
                ReportRow::Warning { modes, message } => format!("warning,{modes},{message}"),
                ReportRow::Error { modes, message } => format!("error,{modes},{message}"),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("distance,shape_id,mean,max\n");
        for d in &self.distances {
            out.push_str(&format!(
                "distance,{},{},{}\n",
                d.shape_id, d.distance.mean, d.distance.max
            ));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
