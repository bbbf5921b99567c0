//! Curve, series and snapshot files.
//!
//! Curves are CSV with a `c0,...,c{n-1}` header and one vertex per row,
//! written with 17 significant digits so a write/read cycle is bitwise exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{SeriesRow, Snapshot};
use crate::energy::EnergyBreakdown;
use crate::geometry::{DiscreteCurve, GeometryError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Geometry {
        path: PathBuf,
        source: GeometryError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_curve_to<W: Write>(out: W, curve: &DiscreteCurve) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = (0..curve.dim()).map(|c| format!("c{c}")).collect();
    w.write_record(&header)?;
    for row in curve.vertices().outer_iter() {
        w.write_record(row.iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv(path: &Path, curve: &DiscreteCurve) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_curve_to(BufWriter::new(file), curve).map_err(csv_err(path))
}

pub fn read_curve_from<R: Read>(input: R, path: &Path) -> Result<DiscreteCurve, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err(path))?.clone();
    for (c, name) in header.iter().enumerate() {
        if name.trim() != format!("c{c}") {
            return Err(IoError::Format {
                path: path.to_path_buf(),
                line: 1,
                message: format!("expected column c{c}, found {name:?}"),
            });
        }
    }
    let dim = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| IoError::Format {
                path: path.to_path_buf(),
                line: k + 2,
                message: format!("not a number: {field:?}"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let vertices = Array2::from_shape_vec((rows, dim), data).map_err(|e| IoError::Format {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    DiscreteCurve::new(vertices).map_err(|source| IoError::Geometry {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_curve_csv(path: &Path) -> Result<DiscreteCurve, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_curve_from(file, path)
}

pub fn write_series_csv(path: &Path, series: &[SeriesRow]) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in series {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_series_csv(path: &Path) -> Result<Vec<SeriesRow>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize()
        .collect::<Result<Vec<SeriesRow>, _>>()
        .map_err(csv_err(path))
}

/// Sidecar written next to every snapshot curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub v_l2: f64,
    pub bc_residual: [f64; 2],
    pub length: f64,
}

impl SnapshotMeta {
    pub fn from_row(row: &SeriesRow) -> Self {
        Self {
            t: row.t,
            energy: EnergyBreakdown {
                bending: row.bending,
                coupling: row.coupling,
                length: row.length,
                total: row.total,
            },
            v_l2: row.v_l2,
            bc_residual: [row.bc0, row.bc1],
            length: row.length,
        }
    }
}

pub fn snapshot_stem(step: usize) -> String {
    format!("snap_{step:08}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_snapshot(dir: &Path, snap: &Snapshot) -> Result<(), IoError> {
    let stem = snapshot_stem(snap.step);
    write_curve_csv(&dir.join(format!("{stem}.csv")), &snap.curve)?;
    write_json(&dir.join(format!("{stem}.json")), &SnapshotMeta::from_row(&snap.row))
}

/// Snapshot steps found in `dir`, sorted.
pub fn list_snapshots(dir: &Path) -> Result<Vec<usize>, IoError> {
    let mut steps = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(num) = name
            .strip_prefix("snap_")
            .and_then(|rest| rest.strip_suffix(".csv"))
        {
            if let Ok(step) = num.parse() {
                steps.push(step);
            }
        }
    }
    steps.sort_unstable();
    Ok(steps)
}

pub fn read_snapshot(dir: &Path, step: usize) -> Result<(DiscreteCurve, SnapshotMeta), IoError> {
    let stem = snapshot_stem(step);
    let curve = read_curve_csv(&dir.join(format!("{stem}.csv")))?;
    let meta = read_json(&dir.join(format!("{stem}.json")))?;
    Ok((curve, meta))
}
