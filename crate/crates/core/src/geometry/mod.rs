//! Pinhole cameras, world-to-image projection and voxel footprints.

mod parfile;

pub(crate) use parfile::parse_line as parse_camera_line;
pub use parfile::{format_camera_file, load_camera_file, parse_camera_file, CameraEntry};

use nalgebra::{Matrix3, Point3, Vector3};
use thiserror::Error;

/// A point in world coordinates. Units are whatever the camera file uses.
pub type WorldPoint = Point3<f64>;

/// Projections with homogeneous depth at or below this are rejected.
pub const DEPTH_EPSILON: f64 = 1e-9;

const ROTATION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("I/O error reading {path}: {message}")]
    Io { path: String, message: String },
}

/// The point does not lie in front of the camera.
#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
#[error("point projects behind the camera")]
pub struct BehindCamera;

/// Intrinsics and pose of a calibrated pinhole camera, without image size.
///
/// Camera files carry only these, the image size comes from the decoded
/// image.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    intrinsics: Matrix3<f64>,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Calibration {
    /// Validates the intrinsics layout and the orthonormality of `rotation`.
    pub fn new(
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        check_intrinsics(&intrinsics)?;
        check_rotation(&rotation)?;
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidCamera("translation is not finite".into()));
        }
        Ok(Calibration { intrinsics, rotation, translation })
    }

    /// Camera looking from `eye` toward `target`, image x to the right and
    /// image y along `down` (projected onto the image plane).
    pub fn look_at(
        eye: WorldPoint,
        target: WorldPoint,
        down: Vector3<f64>,
        focal: f64,
        principal_point: (f64, f64),
    ) -> Result<Self, GeometryError> {
        let forward = target - eye;
        if forward.norm() == 0.0 {
            return Err(GeometryError::InvalidCamera("eye coincides with target".into()));
        }
        let forward = forward.normalize();
        let right = down.cross(&forward);
        if right.norm() < 1e-12 {
            return Err(GeometryError::InvalidCamera("down vector is parallel to the view direction".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye.coords);
        #[rustfmt::skip]
        let intrinsics = Matrix3::new(
            focal, 0.0, principal_point.0,
            0.0, focal, principal_point.1,
            0.0, 0.0, 1.0,
        );
        Calibration::new(intrinsics, rotation, translation)
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates, `-Rᵀ t`.
    pub fn center(&self) -> WorldPoint {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }
}

fn check_intrinsics(k: &Matrix3<f64>) -> Result<(), GeometryError> {
    if k.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidCamera("intrinsics are not finite".into()));
    }
    if (k[(2, 2)] - 1.0).abs() > 1e-12 {
        return Err(GeometryError::InvalidCamera(format!("intrinsics[2][2] is {}, expected 1", k[(2, 2)])));
    }
    if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 {
        return Err(GeometryError::InvalidCamera("intrinsics are not upper-triangular".into()));
    }
    if k[(0, 0)] <= 0.0 || k[(1, 1)] <= 0.0 {
        return Err(GeometryError::InvalidCamera("focal lengths must be positive".into()));
    }
    Ok(())
}

fn check_rotation(r: &Matrix3<f64>) -> Result<(), GeometryError> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidCamera("rotation is not finite".into()));
    }
    let deviation = (r.transpose() * r - Matrix3::identity()).amax();
    if deviation > ROTATION_TOLERANCE {
        return Err(GeometryError::InvalidCamera(format!("rotation is not orthonormal (max deviation {deviation:e})")));
    }
    let det = r.determinant();
    if (det - 1.0).abs() > ROTATION_TOLERANCE {
        return Err(GeometryError::InvalidCamera(format!("rotation determinant is {det}, expected 1")));
    }
    Ok(())
}

/// A calibrated pinhole camera together with the size of its image.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    calibration: Calibration,
    width: u32,
    height: u32,
}

impl CameraModel {
    pub fn new(calibration: Calibration, width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidCamera(format!("image size {width}x{height} is empty")));
        }
        Ok(CameraModel { calibration, width, height })
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn center(&self) -> WorldPoint {
        self.calibration.center()
    }

    /// Projects `p` to sub-pixel image coordinates `(u, v)`.
    pub fn project(&self, p: &WorldPoint) -> Result<(f64, f64), BehindCamera> {
        project_point(self, p)
    }

    /// Clipped pixel rectangle covering the projection of a voxel.
    pub fn footprint(&self, corners: &[WorldPoint; 8]) -> Option<PixelRect> {
        voxel_footprint(self, corners)
    }
}

/// Dehomogenized `K (R p + t)`.
pub fn project_point(cam: &CameraModel, p: &WorldPoint) -> Result<(f64, f64), BehindCamera> {
    let c = &cam.calibration;
    let h = c.intrinsics * (c.rotation * p.coords + c.translation);
    let w = h.z;
    if w.is_nan() || w <= DEPTH_EPSILON {
        return Err(BehindCamera);
    }
    Ok((h.x / w, h.y / w))
}

/// Inclusive rectangle of pixel indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelRect {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl PixelRect {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max);
        PixelRect { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> usize {
        self.width() as usize * self.height() as usize
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x_min..=self.x_max).contains(&x) && (self.y_min..=self.y_max).contains(&y)
    }

    pub fn intersects(&self, other: &PixelRect) -> bool {
        self.x_min <= other.x_max && other.x_min <= self.x_max && self.y_min <= other.y_max && other.y_min <= self.y_max
    }
}

/// Bounding box of the projected voxel corners, rounded outward and clipped
/// to the image. `None` if a corner is behind the camera or nothing remains
/// after clipping.
pub fn voxel_footprint(cam: &CameraModel, corners: &[WorldPoint; 8]) -> Option<PixelRect> {
    let mut u_lo = f64::INFINITY;
    let mut u_hi = f64::NEG_INFINITY;
    let mut v_lo = f64::INFINITY;
    let mut v_hi = f64::NEG_INFINITY;
    for corner in corners {
        let (u, v) = project_point(cam, corner).ok()?;
        u_lo = u_lo.min(u);
        u_hi = u_hi.max(u);
        v_lo = v_lo.min(v);
        v_hi = v_hi.max(v);
    }
    let (x_min, x_max) = clip_span(u_lo.floor(), u_hi.ceil(), cam.width)?;
    let (y_min, y_max) = clip_span(v_lo.floor(), v_hi.ceil(), cam.height)?;
    Some(PixelRect { x_min, y_min, x_max, y_max })
}

fn clip_span(lo: f64, hi: f64, extent: u32) -> Option<(u32, u32)> {
    let last = f64::from(extent - 1);
    if !(lo.is_finite() && hi.is_finite()) || hi < 0.0 || lo > last {
        return None;
    }
    Some((lo.max(0.0) as u32, hi.min(last) as u32))
}
