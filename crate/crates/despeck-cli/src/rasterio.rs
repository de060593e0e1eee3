//! On-disk raster formats.
//!
//! The native format is lossless and trivially seekable:
//!
//! ```text
//! RASTER <width> <height>\n      (ASCII header)
//! <width * height> f64 values, row-major, little-endian
//! ```
//!
//! Label rasters use the magic `LABELS` and one byte per pixel. PGM
//! (16-bit P5) is export-only: its quantization would corrupt metrics,
//! so nothing reads it back.

use std::fs;
use std::path::Path;

use despeck_core::raster::{Label, LabelRaster, Raster};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: expected magic {expected:?} at byte 0")]
    BadMagic { path: String, expected: &'static str },
    #[error("{path}: malformed header at byte {offset}: {reason}")]
    BadHeader { path: String, offset: usize, reason: String },
    #[error("{path}: payload at byte {offset} holds {got} bytes, expected {expected}")]
    Truncated { path: String, offset: usize, expected: usize, got: usize },
    #[error("{path}: invalid label {value} at byte {offset}")]
    BadLabel { path: String, offset: usize, value: u8 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Shape(#[from] despeck_core::Error),
}

fn read_file(path: &Path) -> Result<Vec<u8>, FormatError> {
    fs::read(path).map_err(|source| FormatError::Io { path: display(path), source })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    fs::write(path, bytes).map_err(|source| FormatError::Io { path: display(path), source })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Parses `<MAGIC> <width> <height>\n`, returning the dimensions and the
/// offset of the first payload byte.
fn parse_header(
    path: &Path,
    bytes: &[u8],
    magic: &'static str,
) -> Result<(usize, usize, usize), FormatError> {
    if !bytes.starts_with(magic.as_bytes()) {
        return Err(FormatError::BadMagic { path: display(path), expected: magic });
    }
    let line_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::BadHeader {
            path: display(path),
            offset: bytes.len(),
            reason: "unterminated header line".into(),
        })?;
    let header = std::str::from_utf8(&bytes[..line_end]).map_err(|e| FormatError::BadHeader {
        path: display(path),
        offset: e.valid_up_to(),
        reason: "header is not ASCII".into(),
    })?;
    let mut fields = header.split_whitespace();
    fields.next();
    let mut dimension = |name: &str| {
        fields
            .next()
            .ok_or_else(|| FormatError::BadHeader {
                path: display(path),
                offset: magic.len(),
                reason: format!("missing {name}"),
            })?
            .parse::<usize>()
            .map_err(|_| FormatError::BadHeader {
                path: display(path),
                offset: magic.len(),
                reason: format!("{name} is not a positive integer"),
            })
    };
    let width = dimension("width")?;
    let height = dimension("height")?;
    if fields.next().is_some() {
        return Err(FormatError::BadHeader {
            path: display(path),
            offset: line_end,
            reason: "trailing fields in header".into(),
        });
    }
    Ok((width, height, line_end + 1))
}

pub fn write_raster(path: &Path, raster: &Raster<f64>) -> Result<(), FormatError> {
    let mut bytes = format!("RASTER {} {}\n", raster.width(), raster.height()).into_bytes();
    bytes.reserve(raster.len() * 8);
    for v in raster.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_file(path, &bytes)
}

pub fn read_raster(path: &Path) -> Result<Raster<f64>, FormatError> {
    let bytes = read_file(path)?;
    let (width, height, start) = parse_header(path, &bytes, "RASTER")?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| FormatError::BadHeader {
            path: display(path),
            offset: "RASTER".len(),
            reason: "dimensions overflow".into(),
        })?;
    let payload = &bytes[start.min(bytes.len())..];
    if payload.len() != expected {
        return Err(FormatError::Truncated {
            path: display(path),
            offset: start,
            expected,
            got: payload.len(),
        });
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks are 8 bytes")))
        .collect();
    Ok(Raster::new(width, height, data)?)
}

pub fn write_labels(path: &Path, labels: &LabelRaster) -> Result<(), FormatError> {
    let mut bytes = format!("LABELS {} {}\n", labels.width(), labels.height()).into_bytes();
    bytes.extend(labels.data().iter().map(|l| l.as_u8()));
    write_file(path, &bytes)
}

pub fn read_labels(path: &Path) -> Result<LabelRaster, FormatError> {
    let bytes = read_file(path)?;
    let (width, height, start) = parse_header(path, &bytes, "LABELS")?;
    let expected = width.checked_mul(height).ok_or_else(|| FormatError::BadHeader {
        path: display(path),
        offset: "LABELS".len(),
        reason: "dimensions overflow".into(),
    })?;
    let payload = &bytes[start.min(bytes.len())..];
    if payload.len() != expected {
        return Err(FormatError::Truncated {
            path: display(path),
            offset: start,
            expected,
            got: payload.len(),
        });
    }
    let mut data = Vec::with_capacity(expected);
    for (i, &b) in payload.iter().enumerate() {
        data.push(Label::from_u8(b).map_err(|_| FormatError::BadLabel {
            path: display(path),
            offset: start + i,
            value: b,
        })?);
    }
    Ok(LabelRaster::new(width, height, data)?)
}

/// 16-bit binary PGM with linear min-max scaling, for quick viewing.
/// The scaling parameters are recorded in a header comment so the image
/// is interpretable, but the export is one-way by design.
pub fn export_pgm(path: &Path, raster: &Raster<f64>) -> Result<(), FormatError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in raster.data() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = format!(
        "P5\n# linear min-max scaling: min={lo:.8e} max={hi:.8e}\n{} {}\n65535\n",
        raster.width(),
        raster.height()
    )
    .into_bytes();
    for &v in raster.data() {
        let scaled = ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
        bytes.extend_from_slice(&scaled.to_be_bytes());
    }
    write_file(path, &bytes)
}
