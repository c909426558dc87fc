//! Reader and writer for the multi-view camera-parameter ("par") format.
//!
//! ```text
//! <count>
//! <name> k11 k12 k13 k21 k22 k23 k31 k32 k33 r11 r12 r13 r21 r22 r23 r31 r32 r33 t1 t2 t3
//! ```
//!
//! Projection is `K [R | t]`. Image sizes are not part of the format.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::{Calibration, GeometryError};

const NUMBERS_PER_LINE: usize = 21;

/// One line of a camera file.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraEntry {
    pub name: String,
    pub calibration: Calibration,
}

pub fn load_camera_file(path: impl AsRef<Path>) -> Result<Vec<CameraEntry>, GeometryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeometryError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_camera_file(&text)
}

pub fn parse_camera_file(text: &str) -> Result<Vec<CameraEntry>, GeometryError> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim())).filter(|(_, l)| !l.is_empty());

    let (header_line, header) =
        lines.next().ok_or(GeometryError::Parse { line: 1, message: "missing camera count".into() })?;
    let count: usize = header.parse().map_err(|_| GeometryError::Parse {
        line: header_line,
        message: format!("expected camera count, found {header:?}"),
    })?;

    let mut entries = Vec::with_capacity(count);
    let mut last_line = header_line;
    for (line, content) in lines {
        last_line = line;
        if entries.len() == count {
            return Err(GeometryError::Parse { line, message: format!("more camera lines than the declared {count}") });
        }
        entries.push(parse_line(line, content)?);
    }
    if entries.len() != count {
        return Err(GeometryError::Parse {
            line: last_line,
            message: format!("declared {count} cameras, found {}", entries.len()),
        });
    }
    Ok(entries)
}

pub(crate) fn parse_line(line: usize, content: &str) -> Result<CameraEntry, GeometryError> {
    let mut tokens = content.split_whitespace();
    let name = tokens.next().unwrap_or_default().to_string();
    let numbers = tokens
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| GeometryError::Parse { line, message: format!("invalid number {tok:?}") })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if numbers.len() != NUMBERS_PER_LINE {
        return Err(GeometryError::Parse {
            line,
            message: format!("expected {NUMBERS_PER_LINE} numbers after the name, found {}", numbers.len()),
        });
    }
    let intrinsics = Matrix3::from_row_slice(&numbers[0..9]);
    let rotation = Matrix3::from_row_slice(&numbers[9..18]);
    let translation = Vector3::from_row_slice(&numbers[18..21]);
    let calibration = Calibration::new(intrinsics, rotation, translation).map_err(|e| {
        let message = match e {
            GeometryError::InvalidCamera(m) => m,
            other => other.to_string(),
        };
        GeometryError::Invariant { line, message }
    })?;
    Ok(CameraEntry { name, calibration })
}

/// Serializes entries with shortest round-trip float formatting, so parsing
/// the output reproduces every matrix bit for bit.
pub fn format_camera_file(entries: &[CameraEntry]) -> String {
    let mut out = format!("{}\n", entries.len());
    for entry in entries {
        let c = &entry.calibration;
        out.push_str(&entry.name);
        let k = c.intrinsics().transpose();
        let r = c.rotation().transpose();
        // column-major storage of the transpose walks the rows
        for v in k.iter().chain(r.iter()).chain(c.translation().iter()) {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}
