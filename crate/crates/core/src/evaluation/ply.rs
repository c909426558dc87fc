//! ASCII PLY for colored point clouds.
//!
//! The writer emits `x y z` as float and `red green blue` as uchar. The
//! reader accepts any ASCII PLY whose first element is `vertex` with `x`,
//! `y` and `z` properties; colors default to black and later elements
//! (faces, ...) are skipped.

use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::{EvalError, PointCloud};
use crate::Rgb;

pub fn write_ply<W: Write>(cloud: &PointCloud, mut out: W) -> std::io::Result<()> {
    let mut header = String::from("ply\nformat ascii 1.0\n");
    if !cloud.units.is_empty() {
        header.push_str(&format!("comment units {}\n", cloud.units));
    }
    header.push_str(&format!(
        "element vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
        cloud.len()
    ));
    out.write_all(header.as_bytes())?;
    let mut body = String::with_capacity(cloud.len() * 32);
    for (p, c) in &cloud.points {
        use std::fmt::Write as _;
        let _ = writeln!(body, "{} {} {} {} {} {}", p.x as f32, p.y as f32, p.z as f32, c.r(), c.g(), c.b());
    }
    out.write_all(body.as_bytes())?;
    out.flush()
}

/// Writes the cloud next to `path` and renames it into place, so a failed
/// export never leaves a partial file. Empty clouds are refused.
pub fn export_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    if cloud.is_empty() {
        return Err(EvalError::EmptyCloud);
    }
    let io_err = |source| EvalError::Io { path: path.display().to_string(), source };
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::File::create(&tmp)
        .and_then(|f| write_ply(cloud, std::io::BufWriter::new(f)))
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud, EvalError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
    parse_ply(&text)
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<String>,
}

pub fn parse_ply(text: &str) -> Result<PointCloud, EvalError> {
    let err = |line: usize, message: String| EvalError::Ply { line, message };
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));

    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(err(1, "missing ply magic".into())),
    }
    let mut units = String::new();
    let mut elements: Vec<Element> = Vec::new();
    let mut last = 1;
    loop {
        let (n, line) = lines.next().ok_or_else(|| err(last, "missing end_header".into()))?;
        last = n;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(err(n, format!("unsupported format {other}"))),
            ["comment", "units", u, ..] => units = (*u).to_string(),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: (*name).to_string(),
                count: count.parse().map_err(|_| err(n, format!("invalid element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", .., name] => match elements.last_mut() {
                Some(e) => e.properties.push((*name).to_string()),
                None => return Err(err(n, "property before any element".into())),
            },
            _ => return Err(err(n, format!("unrecognised header line {line:?}"))),
        }
    }

    let vertex = match elements.first() {
        Some(e) if e.name == "vertex" => e,
        _ => return Err(err(last, "first element must be vertex".into())),
    };
    let find = |names: &[&str]| vertex.properties.iter().position(|p| names.contains(&p.as_str()));
    let (Some(xi), Some(yi), Some(zi)) = (find(&["x"]), find(&["y"]), find(&["z"])) else {
        return Err(err(last, "vertex element lacks x, y or z".into()));
    };
    let color = [find(&["red", "diffuse_red"]), find(&["green", "diffuse_green"]), find(&["blue", "diffuse_blue"])];

    let mut points = Vec::with_capacity(vertex.count);
    for _ in 0..vertex.count {
        let (n, line) = lines.next().ok_or_else(|| err(last, "truncated vertex data".into()))?;
        last = n;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < vertex.properties.len() {
            return Err(err(n, format!("expected {} values, found {}", vertex.properties.len(), tokens.len())));
        }
        let coord = |i: usize| -> Result<f64, EvalError> {
            let v: f64 = tokens[i].parse().map_err(|_| err(n, format!("invalid number {:?}", tokens[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(n, "non-finite coordinate".into()))
            }
        };
        let p = Point3::new(coord(xi)?, coord(yi)?, coord(zi)?);
        let mut rgb = [0u8; 3];
        for (ch, idx) in rgb.iter_mut().zip(color) {
            if let Some(i) = idx {
                *ch = tokens[i].parse().map_err(|_| err(n, format!("invalid color {:?}", tokens[i])))?;
            }
        }
        points.push((p, Rgb(rgb)));
    }
    Ok(PointCloud::new(points, units))
}
