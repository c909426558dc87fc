//! Dense voxel grid, 26-neighborhoods and plane-sweep ordering.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraModel, WorldPoint};
use crate::Rgb;

/// Integer voxel coordinate `(i, j, k)`.
pub type VoxelCoord = [usize; 3];

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
    #[error("voxel {0:?} is outside the grid")]
    OutOfBounds(VoxelCoord),
    #[error("illegal state transition for voxel {coord:?}: {from:?} -> {to:?}")]
    IllegalTransition { coord: VoxelCoord, from: VoxelState, to: VoxelState },
    #[error(
        "visibility constraint violated: camera {camera} center {center:?} is not on the {axis} side of the grid \
         (must be at least one voxel before the near face at {near_face})"
    )]
    VisibilityConstraintViolation { camera: usize, center: [f64; 3], axis: SweepAxis, near_face: f64 },
}

/// Placement and resolution of a grid, without voxel state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub origin: WorldPoint,
    pub voxel_size: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: WorldPoint, voxel_size: f64, dims: [usize; 3]) -> Result<Self, GridError> {
        let spec = GridSpec { origin, voxel_size, dims };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.voxel_size > 0.0 && self.voxel_size.is_finite()) {
            return Err(GridError::InvalidSpec(format!("voxel size {} must be positive", self.voxel_size)));
        }
        if self.dims.contains(&0) {
            return Err(GridError::InvalidSpec(format!("dimensions {:?} must be positive", self.dims)));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(GridError::InvalidSpec("origin is not finite".into()));
        }
        if self.dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).is_none() {
            return Err(GridError::InvalidSpec("grid is too large".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoxelState {
    #[default]
    Unknown,
    Carved,
    Colored(Rgb),
}

impl VoxelState {
    pub fn is_terminal(self) -> bool {
        !matches!(self, VoxelState::Unknown)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    spec: GridSpec,
    states: Vec<VoxelState>,
}

impl VoxelGrid {
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        Ok(VoxelGrid { spec, states: vec![VoxelState::Unknown; spec.len()] })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dims(&self) -> [usize; 3] {
        self.spec.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.spec.voxel_size
    }

    pub fn origin(&self) -> WorldPoint {
        self.spec.origin
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, c: VoxelCoord) -> bool {
        c[0] < self.spec.dims[0] && c[1] < self.spec.dims[1] && c[2] < self.spec.dims[2]
    }

    /// `i + nx * (j + ny * k)`
    #[inline]
    pub fn index(&self, c: VoxelCoord) -> usize {
        let [nx, ny, _] = self.spec.dims;
        c[0] + nx * (c[1] + ny * c[2])
    }

    #[inline]
    pub fn coord(&self, index: usize) -> VoxelCoord {
        let [nx, ny, _] = self.spec.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    fn check(&self, c: VoxelCoord) -> Result<(), GridError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(GridError::OutOfBounds(c))
        }
    }

    /// The cube vertices; bit 0 of the array index selects the x side, bit 1
    /// the y side and bit 2 the z side.
    pub fn voxel_corners(&self, c: VoxelCoord) -> Result<[WorldPoint; 8], GridError> {
        self.check(c)?;
        let s = self.spec.voxel_size;
        let base = self.spec.origin + Vector3::new(c[0] as f64, c[1] as f64, c[2] as f64) * s;
        let mut corners = [base; 8];
        for (n, corner) in corners.iter_mut().enumerate() {
            *corner = base + Vector3::new((n & 1) as f64, ((n >> 1) & 1) as f64, ((n >> 2) & 1) as f64) * s;
        }
        Ok(corners)
    }

    pub fn voxel_center(&self, c: VoxelCoord) -> Result<WorldPoint, GridError> {
        self.check(c)?;
        let s = self.spec.voxel_size;
        Ok(self.spec.origin + Vector3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * s)
    }

    /// The voxel containing `p`, if any. Points on a shared face belong to
    /// the voxel with the larger index.
    pub fn locate(&self, p: &WorldPoint) -> Option<VoxelCoord> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.spec.origin[a]) / self.spec.voxel_size).floor();
            if !(f >= 0.0 && f < self.spec.dims[a] as f64) {
                return None;
            }
            c[a] = f as usize;
        }
        Some(c)
    }

    pub fn state(&self, c: VoxelCoord) -> Result<VoxelState, GridError> {
        self.check(c)?;
        Ok(self.states[self.index(c)])
    }

    pub fn states(&self) -> &[VoxelState] {
        &self.states
    }

    /// Moves an `Unknown` voxel to a terminal state.
    pub fn set_state(&mut self, c: VoxelCoord, to: VoxelState) -> Result<(), GridError> {
        self.check(c)?;
        let i = self.index(c);
        let from = self.states[i];
        if from.is_terminal() || !to.is_terminal() {
            return Err(GridError::IllegalTransition { coord: c, from, to });
        }
        self.states[i] = to;
        Ok(())
    }

    pub fn colored(&self) -> impl Iterator<Item = (VoxelCoord, Rgb)> + '_ {
        self.states.iter().enumerate().filter_map(|(i, s)| match s {
            VoxelState::Colored(rgb) => Some((self.coord(i), *rgb)),
            _ => None,
        })
    }

    pub fn colored_count(&self) -> usize {
        self.states.iter().filter(|s| matches!(s, VoxelState::Colored(_))).count()
    }

    pub fn neighbors26(&self, c: VoxelCoord) -> Result<Neighbors26, GridError> {
        self.check(c)?;
        Ok(Neighbors26 { center: c, dims: self.spec.dims, next: 0 })
    }
}

/// In-bounds coordinates differing from a voxel by at most one step along
/// every axis, the voxel itself excluded.
#[derive(Debug, Clone)]
pub struct Neighbors26 {
    center: VoxelCoord,
    dims: [usize; 3],
    next: usize,
}

impl Iterator for Neighbors26 {
    type Item = VoxelCoord;

    fn next(&mut self) -> Option<VoxelCoord> {
        while self.next < 27 {
            let n = self.next;
            self.next += 1;
            if n == 13 {
                continue;
            }
            let offset = [n % 3, (n / 3) % 3, n / 9];
            let mut out = [0usize; 3];
            let mut inside = true;
            for a in 0..3 {
                // offset 0, 1, 2 maps to -1, 0, +1
                match (self.center[a] + offset[a]).checked_sub(1) {
                    Some(v) if v < self.dims[a] => out[a] = v,
                    _ => inside = false,
                }
            }
            if inside {
                return Some(out);
            }
        }
        None
    }
}

/// Sweep direction. `+Z` visits increasing `k`, which requires every camera
/// on the low-z side of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] =
        [SweepAxis::PosX, SweepAxis::NegX, SweepAxis::PosY, SweepAxis::NegY, SweepAxis::PosZ, SweepAxis::NegZ];

    /// 0, 1 or 2 for x, y, z.
    pub fn dimension(self) -> usize {
        match self {
            SweepAxis::PosX | SweepAxis::NegX => 0,
            SweepAxis::PosY | SweepAxis::NegY => 1,
            SweepAxis::PosZ | SweepAxis::NegZ => 2,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, SweepAxis::PosX | SweepAxis::PosY | SweepAxis::PosZ)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.is_positive() { '+' } else { '-' };
        let name = ['x', 'y', 'z'][self.dimension()];
        write!(f, "{sign}{name}")
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("invalid sweep axis {s:?}, expected one of +x -x +y -y +z -z"))
    }
}

/// Layers of a grid perpendicular to the sweep axis, nearest to the cameras
/// first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepOrder {
    axis: SweepAxis,
    dims: [usize; 3],
}

impl SweepOrder {
    pub fn axis(&self) -> SweepAxis {
        self.axis
    }

    pub fn layer_count(&self) -> usize {
        self.dims[self.axis.dimension()]
    }

    /// Grid coordinate along the sweep axis of layer `layer`.
    pub fn slice_index(&self, layer: usize) -> usize {
        if self.axis.is_positive() {
            layer
        } else {
            self.layer_count() - 1 - layer
        }
    }

    pub fn layer_of(&self, c: VoxelCoord) -> usize {
        let s = c[self.axis.dimension()];
        if self.axis.is_positive() {
            s
        } else {
            self.layer_count() - 1 - s
        }
    }

    /// Voxels of one layer in grid index order.
    pub fn layer_coords(&self, layer: usize) -> Vec<VoxelCoord> {
        let a = self.axis.dimension();
        let s = self.slice_index(layer);
        let (u, v) = match a {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut out = Vec::with_capacity(self.dims[u] * self.dims[v]);
        for q in 0..self.dims[v] {
            for p in 0..self.dims[u] {
                let mut c = [0; 3];
                c[a] = s;
                c[u] = p;
                c[v] = q;
                out.push(c);
            }
        }
        out
    }

    pub fn layers(&self) -> impl Iterator<Item = Vec<VoxelCoord>> + '_ {
        (0..self.layer_count()).map(|l| self.layer_coords(l))
    }
}

/// Validates that every camera center lies at least one voxel outside the
/// near face of the grid for `axis` and returns the layer order.
pub fn build_sweep<'a>(
    grid: &VoxelGrid,
    cameras: impl IntoIterator<Item = &'a CameraModel>,
    axis: SweepAxis,
) -> Result<SweepOrder, GridError> {
    let spec = grid.spec();
    let a = axis.dimension();
    let low = spec.origin[a];
    let high = low + spec.voxel_size * spec.dims[a] as f64;
    for (n, cam) in cameras.into_iter().enumerate() {
        let center = cam.center();
        let ok =
            if axis.is_positive() { center[a] <= low - spec.voxel_size } else { center[a] >= high + spec.voxel_size };
        if !ok {
            return Err(GridError::VisibilityConstraintViolation {
                camera: n,
                center: [center.x, center.y, center.z],
                axis,
                near_face: if axis.is_positive() { low } else { high },
            });
        }
    }
    Ok(SweepOrder { axis, dims: spec.dims })
}
