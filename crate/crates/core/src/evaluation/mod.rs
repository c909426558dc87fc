//! Point clouds, PLY I/O and geometric accuracy/completeness metrics.

mod kdtree;
mod ply;

pub use kdtree::KdTree;
pub use ply::{export_ply, parse_ply, read_ply, write_ply};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::WorldPoint;
use crate::grid::VoxelGrid;
use crate::Rgb;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reconstruction has no colored voxels")]
    EmptyReconstruction,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("PLY line {line}: {message}")]
    Ply { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<(WorldPoint, Rgb)>,
    /// Free-form unit label, e.g. `m` or `mm`.
    pub units: String,
}

impl PointCloud {
    pub fn new(points: Vec<(WorldPoint, Rgb)>, units: impl Into<String>) -> Self {
        PointCloud { points, units: units.into() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = &WorldPoint> {
        self.points.iter().map(|(p, _)| p)
    }
}

/// One point per colored voxel, at the voxel center.
pub fn grid_to_cloud(grid: &VoxelGrid) -> Result<PointCloud, EvalError> {
    let points: Vec<_> =
        grid.colored().map(|(c, rgb)| (grid.voxel_center(c).expect("colored voxels are in bounds"), rgb)).collect();
    if points.is_empty() {
        return Err(EvalError::EmptyReconstruction);
    }
    Ok(PointCloud::new(points, ""))
}

/// Distance from every point of `from` to its nearest neighbor in `to`.
pub fn nearest_distances(from: &PointCloud, to: &PointCloud) -> Result<Vec<f64>, EvalError> {
    if from.is_empty() || to.is_empty() {
        return Err(EvalError::EmptyCloud);
    }
    let tree = KdTree::new(to.positions().copied().collect());
    Ok(from.points.par_iter().map(|(p, _)| tree.nearest_distance_squared(p).sqrt()).collect())
}

/// 1-based rank `ceil(percentile * n)`, clamped to `1..=n`.
pub fn percentile_rank(percentile: f64, n: usize) -> usize {
    // absorb representation error such as 0.9 * 10 = 9.000000000000002
    let raw = (percentile * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Smallest `d` such that `percentile` of the reconstruction points lie
/// within `d` of the ground truth.
pub fn accuracy(recon: &PointCloud, truth: &PointCloud, percentile: f64) -> Result<f64, EvalError> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(EvalError::InvalidParameter(format!("percentile {percentile} must lie in (0, 1]")));
    }
    let mut d = nearest_distances(recon, truth)?;
    let rank = percentile_rank(percentile, d.len());
    let (_, kth, _) = d.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*kth)
}

/// Fraction of ground-truth points within `tol` of the reconstruction.
pub fn completeness(truth: &PointCloud, recon: &PointCloud, tol: f64) -> Result<f64, EvalError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(EvalError::InvalidParameter(format!("tolerance {tol} must be positive")));
    }
    let d = nearest_distances(truth, recon)?;
    Ok(fraction_within(&d, tol, 1.0))
}

fn fraction_within(distances: &[f64], tol: f64, scale: f64) -> f64 {
    distances.iter().filter(|d| **d * scale <= tol).count() as f64 / distances.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub percentile: f64,
    /// Completeness tolerance, in scaled units.
    pub tol: f64,
    /// Multiplies raw coordinate distances before they are reported or
    /// compared with `tol`, e.g. 1000 for clouds in meters and metrics in mm.
    pub scale: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { percentile: 0.90, tol: 1.25, scale: 1000.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub completeness: f64,
}

pub fn evaluate(recon: &PointCloud, truth: &PointCloud, params: &EvalParams) -> Result<Metrics, EvalError> {
    if !(params.scale > 0.0 && params.scale.is_finite()) {
        return Err(EvalError::InvalidParameter(format!("scale {} must be positive", params.scale)));
    }
    let accuracy = accuracy(recon, truth, params.percentile)? * params.scale;
    if params.tol.is_nan() || params.tol <= 0.0 {
        return Err(EvalError::InvalidParameter(format!("tolerance {} must be positive", params.tol)));
    }
    let completeness = fraction_within(&nearest_distances(truth, recon)?, params.tol, params.scale);
    Ok(Metrics { accuracy, completeness })
}
