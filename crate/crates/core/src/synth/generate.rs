//! Random camera rigs and scenes.

use nalgebra::{Point3, Vector3};
use rand::Rng;

use super::SyntheticScene;
use crate::geometry::{Calibration, CameraModel, PixelRect};
use crate::grid::{GridSpec, SweepAxis, VoxelCoord, VoxelGrid};
use crate::Rgb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigParams {
    pub views: usize,
    pub image_size: (u32, u32),
    /// Camera distance from the grid center, in grid radii.
    pub distance: f64,
    /// Largest angle between a camera's view direction and the sweep axis.
    pub max_tilt_deg: f64,
}

impl Default for RigParams {
    fn default() -> Self {
        RigParams { views: 4, image_size: (128, 128), distance: 3.0, max_tilt_deg: 35.0 }
    }
}

/// Cameras spread around the sweep axis on its near side, all aimed at the
/// grid center.
pub fn rig_cameras<R: Rng>(
    grid: &GridSpec,
    axis: SweepAxis,
    params: &RigParams,
    rng: &mut R,
) -> Vec<(String, CameraModel)> {
    let a = axis.dimension();
    let mut dir = Vector3::zeros();
    dir[a] = if axis.is_positive() { 1.0 } else { -1.0 };
    let e1 = Vector3::from_fn(|i, _| if i == (a + 1) % 3 { 1.0 } else { 0.0 });
    let e2 = dir.cross(&e1);
    let down = if a == 1 { Vector3::z() } else { Vector3::y() };

    let extent = Vector3::from_fn(|i, _| grid.dims[i] as f64 * grid.voxel_size);
    let center = grid.origin + extent / 2.0;
    let radius = extent.norm() / 2.0;
    let distance = params.distance.max(1.5) * radius;
    let (w, h) = params.image_size;
    let tan_half = radius / (distance * distance - radius * radius).sqrt();
    let focal = 0.45 * f64::from(w.min(h)) / tan_half;
    let max_tilt = params.max_tilt_deg.to_radians();

    (0..params.views)
        .map(|n| {
            let phi = std::f64::consts::TAU * n as f64 / params.views as f64 + rng.random_range(-0.3..0.3);
            let theta = if params.views == 1 { 0.0 } else { max_tilt * rng.random_range(0.4..1.0) };
            let offset = dir * theta.cos() + (e1 * phi.cos() + e2 * phi.sin()) * theta.sin();
            let eye = center - offset * distance;
            let calib = Calibration::look_at(eye, center, down, focal, (f64::from(w) / 2.0, f64::from(h) / 2.0))
                .expect("rig geometry is non-degenerate");
            (format!("view{n:03}.ppm"), CameraModel::new(calib, w, h).expect("positive image size"))
        })
        .collect()
}

fn random_color<R: Rng>(rng: &mut R, lo: u8, hi: u8) -> Rgb {
    Rgb::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi))
}

/// Every voxel occupied with probability `fill`, colors uniform per channel
/// in `[40, 250]`.
pub fn random_scene<R: Rng>(
    rng: &mut R,
    grid: GridSpec,
    axis: SweepAxis,
    rig: &RigParams,
    fill: f64,
) -> SyntheticScene {
    let cameras = rig_cameras(&grid, axis, rig, rng);
    let g = VoxelGrid::new(grid).expect("valid grid");
    let mut voxels = Vec::new();
    for i in 0..g.len() {
        if rng.random_bool(fill.clamp(0.0, 1.0)) {
            voxels.push((g.coord(i), random_color(rng, 40, 250)));
        }
    }
    SyntheticScene { grid, axis, cameras, voxels, seed: rng.random() }
}

/// Up to `count` occupied voxels whose footprints are fully inside every
/// image and pairwise disjoint, with a one-pixel gap, in every view. Each
/// voxel therefore shows as a clean uniform rectangle wherever it projects.
/// Channels lie in `[100, 245]`, leaving headroom for noise.
pub fn isolated_scene<R: Rng>(
    rng: &mut R,
    grid: GridSpec,
    axis: SweepAxis,
    rig: &RigParams,
    count: usize,
) -> SyntheticScene {
    let cameras = rig_cameras(&grid, axis, rig, rng);
    let g = VoxelGrid::new(grid).expect("valid grid");
    let mut placed: Vec<(VoxelCoord, Vec<PixelRect>)> = Vec::new();
    let mut voxels = Vec::new();
    for _ in 0..count * 50 {
        if voxels.len() == count {
            break;
        }
        let c = g.coord(rng.random_range(0..g.len()));
        let corners = g.voxel_corners(c).expect("in bounds");
        let rects: Option<Vec<PixelRect>> = cameras
            .iter()
            .map(|(_, cam)| {
                cam.footprint(&corners)
                    .filter(|r| r.x_min > 0 && r.y_min > 0 && r.x_max + 1 < cam.width() && r.y_max + 1 < cam.height())
            })
            .collect();
        let Some(rects) = rects else { continue };
        let clashes = placed.iter().any(|(other, other_rects)| {
            *other == c || rects.iter().zip(other_rects).any(|(a, b)| grown(a).intersects(b))
        });
        if clashes {
            continue;
        }
        voxels.push((c, random_color(rng, 100, 245)));
        placed.push((c, rects));
    }
    SyntheticScene { grid, axis, cameras, voxels, seed: rng.random() }
}

fn grown(r: &PixelRect) -> PixelRect {
    PixelRect::new(r.x_min.saturating_sub(1), r.y_min.saturating_sub(1), r.x_max + 1, r.y_max + 1)
}

/// Unit-voxel grid of `dims` with its near face at the origin plane.
pub fn unit_grid(dims: [usize; 3]) -> GridSpec {
    GridSpec::new(Point3::origin(), 1.0, dims).expect("positive dims")
}
