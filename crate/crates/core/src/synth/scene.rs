//! Plain-text scene description.
//!
//! ```text
//! # comments and blank lines are ignored
//! grid <ox> <oy> <oz> <voxel_size> <nx> <ny> <nz>
//! axis <+x|-x|+y|-y|+z|-z>
//! image <width> <height>
//! seed <n>                      (optional, default 0)
//! cameras <count>
//! <name> <21 numbers, camera-file layout>
//! voxels <count>
//! <i> <j> <k> <r> <g> <b>
//! ```

use std::fmt::Write as _;

use nalgebra::Point3;
use thiserror::Error;

use super::SyntheticScene;
use crate::geometry::{parse_camera_line, CameraEntry, CameraModel, GeometryError};
use crate::grid::{GridError, GridSpec, SweepAxis};
use crate::Rgb;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> SceneError {
    SceneError::Parse { line, message: message.into() }
}

fn numbers<T: std::str::FromStr>(line: usize, tokens: &[&str], expected: usize) -> Result<Vec<T>, SceneError> {
    if tokens.len() != expected {
        return Err(parse_err(line, format!("expected {expected} values, found {}", tokens.len())));
    }
    tokens.iter().map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("invalid value {t:?}")))).collect()
}

pub fn parse_scene(text: &str) -> Result<SyntheticScene, SceneError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut grid = None;
    let mut axis = None;
    let mut image = None;
    let mut seed = 0u64;
    let mut camera_entries: Vec<CameraEntry> = Vec::new();
    let mut voxels = Vec::new();
    let mut last = 0;

    while let Some((line, content)) = lines.next() {
        last = line;
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let (key, rest) = tokens.split_first().expect("line is not empty");
        match *key {
            "grid" => {
                if rest.len() != 7 {
                    return Err(parse_err(line, format!("expected 7 values, found {}", rest.len())));
                }
                let o: Vec<f64> = numbers(line, &rest[..4], 4)?;
                let d: Vec<usize> = numbers(line, &rest[4..], 3)?;
                grid = Some(GridSpec::new(Point3::new(o[0], o[1], o[2]), o[3], [d[0], d[1], d[2]])?);
            }
            "axis" => {
                let [a] = rest else { return Err(parse_err(line, "expected one axis")) };
                axis = Some(a.parse::<SweepAxis>().map_err(|e| parse_err(line, e))?);
            }
            "image" => {
                let wh: Vec<u32> = numbers(line, rest, 2)?;
                image = Some((wh[0], wh[1]));
            }
            "seed" => seed = numbers::<u64>(line, rest, 1)?[0],
            "cameras" => {
                let count = numbers::<usize>(line, rest, 1)?[0];
                for _ in 0..count {
                    let (l, c) = lines.next().ok_or_else(|| parse_err(line, "missing camera lines"))?;
                    camera_entries.push(parse_camera_line(l, c)?);
                }
            }
            "voxels" => {
                let count = numbers::<usize>(line, rest, 1)?[0];
                for _ in 0..count {
                    let (l, c) = lines.next().ok_or_else(|| parse_err(line, "missing voxel lines"))?;
                    let t: Vec<&str> = c.split_whitespace().collect();
                    if t.len() != 6 {
                        return Err(parse_err(l, format!("expected 6 values, found {}", t.len())));
                    }
                    let ijk: Vec<usize> = numbers(l, &t[..3], 3)?;
                    let rgb: Vec<u8> = numbers(l, &t[3..], 3)?;
                    voxels.push(([ijk[0], ijk[1], ijk[2]], Rgb::new(rgb[0], rgb[1], rgb[2])));
                }
            }
            other => return Err(parse_err(line, format!("unknown directive {other:?}"))),
        }
    }

    let grid = grid.ok_or_else(|| parse_err(last, "missing grid directive"))?;
    let axis = axis.ok_or_else(|| parse_err(last, "missing axis directive"))?;
    let (width, height) = image.ok_or_else(|| parse_err(last, "missing image directive"))?;
    let cameras = camera_entries
        .into_iter()
        .map(|e| Ok((e.name, CameraModel::new(e.calibration, width, height)?)))
        .collect::<Result<Vec<_>, SceneError>>()?;
    let scene = SyntheticScene { grid, axis, cameras, voxels, seed };
    scene.validate()?;
    Ok(scene)
}

/// Inverse of [`parse_scene`]. Every camera must share one image size.
pub fn format_scene(scene: &SyntheticScene) -> Result<String, SceneError> {
    let (_, first) = scene.cameras.first().ok_or_else(|| SceneError::Invalid("scene has no cameras".into()))?;
    let size = (first.width(), first.height());
    if scene.cameras.iter().any(|(_, c)| (c.width(), c.height()) != size) {
        return Err(SceneError::Invalid("cameras differ in image size".into()));
    }
    let g = &scene.grid;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "grid {} {} {} {} {} {} {}",
        g.origin.x, g.origin.y, g.origin.z, g.voxel_size, g.dims[0], g.dims[1], g.dims[2]
    );
    let _ = writeln!(out, "axis {}", scene.axis);
    let _ = writeln!(out, "image {} {}", size.0, size.1);
    let _ = writeln!(out, "seed {}", scene.seed);
    let entries: Vec<CameraEntry> = scene
        .cameras
        .iter()
        .map(|(name, cam)| CameraEntry { name: name.clone(), calibration: cam.calibration().clone() })
        .collect();
    let par = crate::geometry::format_camera_file(&entries);
    let _ = write!(out, "cameras {par}");
    let _ = writeln!(out, "voxels {}", scene.voxels.len());
    for ([i, j, k], rgb) in &scene.voxels {
        let _ = writeln!(out, "{i} {j} {k} {} {} {}", rgb.r(), rgb.g(), rgb.b());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCENE: &str = "\
# two voxels
grid -1 -1 0 0.5 4 4 4
axis +z
image 64 48
seed 3
cameras 1
cam0.ppm 50 0 32 0 50 24 0 0 1 1 0 0 0 1 0 0 0 1 0 0 6
voxels 2
0 0 0 255 0 0
3 3 3 0 0 255  # far corner
";

    #[test]
    fn parses_and_round_trips() {
        let scene = parse_scene(SCENE).unwrap();
        assert_eq!(scene.grid.dims, [4, 4, 4]);
        assert_eq!(scene.grid.voxel_size, 0.5);
        assert_eq!(scene.seed, 3);
        assert_eq!(scene.cameras[0].1.width(), 64);
        assert_eq!(scene.voxels[1], ([3, 3, 3], Rgb::new(0, 0, 255)));
        let text = format_scene(&scene).unwrap();
        assert_eq!(parse_scene(&text).unwrap(), scene);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_scene("grid 0 0 0 1 2 2\n"), Err(SceneError::Parse { line: 1, .. })));
        assert!(matches!(parse_scene("bogus 1\n"), Err(SceneError::Parse { line: 1, .. })));
        let no_axis = SCENE.replace("axis +z\n", "");
        assert!(matches!(parse_scene(&no_axis), Err(SceneError::Parse { .. })));
        let bad_color = SCENE.replace("255 0 0", "256 0 0");
        assert!(matches!(parse_scene(&bad_color), Err(SceneError::Parse { line: 9, .. })));
        // camera inside the grid
        let inside = SCENE.replace("0 0 6\n", "0 0 -1\n");
        assert!(matches!(parse_scene(&inside), Err(SceneError::Grid(GridError::VisibilityConstraintViolation { .. }))));
    }
}
