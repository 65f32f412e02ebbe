//! CSV and JSON output. Floats are written as `{:.16e}`, fields are
//! comma-separated and lines end in LF, so identical results give identical
//! bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier_imaging::{FocalPlaneImage, GridSpec, LineProfile, Provenance, SlitPattern};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Field {
    pub fn render(&self) -> String {
        match self {
            Field::Float(v) => format_float(*v),
            Field::Int(v) => v.to_string(),
            Field::Bool(v) => v.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as i64)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Write a header and rows of cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<Field>]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("row has {} fields, header has {}", row.len(), header.len()),
            });
        }
        w.write_record(row.iter().map(Field::render)).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Pixel grid, one row per y index: `y_index,x_0,…,x_{nx-1}`.
pub fn write_image_csv(path: &Path, image: &FocalPlaneImage) -> Result<()> {
    let header: Vec<String> = std::iter::once("y_index".to_string())
        .chain((0..image.grid.nx).map(|i| format!("x_{i}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let ny = if image.grid.is_empty() { 0 } else { image.grid.ny };
    let rows: Vec<Vec<Field>> = (0..ny)
        .map(|iy| {
            std::iter::once(Field::Int(iy as i64))
                .chain(image.row(iy).iter().map(|&v| Field::Float(v)))
                .collect()
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Sidecar describing a focal-plane image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageMetadata {
    pub grid: GridSpec,
    pub pixel_units: &'static str,
    pub pitch_units: &'static str,
    pub delta: f64,
    pub offset_phase: f64,
    pub provenance: Provenance,
    pub coarse_pedestal: bool,
    pub input_photons: f64,
    pub image_photons: f64,
}

impl ImageMetadata {
    pub fn of(image: &FocalPlaneImage) -> Self {
        ImageMetadata {
            grid: image.grid,
            pixel_units: "photons",
            pitch_units: "um",
            delta: image.delta,
            offset_phase: image.offset_phase,
            provenance: image.provenance,
            coarse_pedestal: image.coarse_pedestal,
            input_photons: image.input_photons,
            image_photons: image.total(),
        }
    }
}

pub fn write_line_profile_csv(path: &Path, profile: &LineProfile) -> Result<()> {
    let rows: Vec<Vec<Field>> = profile
        .positions_m
        .iter()
        .zip(&profile.photons)
        .map(|(&x, &n)| vec![Field::Float(x), Field::Float(n)])
        .collect();
    write_table(path, &["position_m", "photons_per_pixel"], &rows)
}

/// Normalized slit pattern, one row per y index like [`write_image_csv`].
pub fn write_slit_pattern_csv(path: &Path, pattern: &SlitPattern) -> Result<()> {
    let header: Vec<String> = std::iter::once("y_index".to_string())
        .chain((0..pattern.nx).map(|i| format!("x_{i}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let ny = if pattern.nx == 0 { 0 } else { pattern.ny };
    let rows: Vec<Vec<Field>> = (0..ny)
        .map(|iy| {
            std::iter::once(Field::Int(iy as i64))
                .chain(pattern.values[iy * pattern.nx..(iy + 1) * pattern.nx].iter().map(|&v| Field::Float(v)))
                .collect()
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}
