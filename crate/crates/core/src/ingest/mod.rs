//! Input images, per-pixel mark bitmaps and dataset loading.

mod marks;
mod ppm;

pub use marks::MarkBitmap;
pub use ppm::{decode_ppm, encode_ppm};

use std::path::Path;

use thiserror::Error;

use crate::geometry::{load_camera_file, CameraModel, GeometryError, PixelRect};
use crate::Rgb;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Camera(#[from] GeometryError),
    #[error("missing image {0}")]
    MissingImage(String),
    #[error("cannot decode image {name}: {message}")]
    Decode { name: String, message: String },
    #[error("image {name} is {found:?}, expected {expected:?}")]
    DimensionMismatch { name: String, expected: (u32, u32), found: (u32, u32) },
    #[error("pixel buffer has {found} bytes, expected {expected}")]
    BadBuffer { expected: usize, found: usize },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

/// An RGB image plus the marks recording which pixels are already explained
/// by an accepted voxel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageView {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
    marks: MarkBitmap,
}

impl ImageView {
    /// Wraps a row-major RGB buffer; all marks start cleared.
    pub fn from_rgb(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, IngestError> {
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected || width == 0 || height == 0 {
            return Err(IngestError::BadBuffer { expected, found: pixels.len() });
        }
        Ok(ImageView { width, height, pixels, marks: MarkBitmap::new(width as usize * height as usize) })
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        let pixels = color.0.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        ImageView { width, height, pixels, marks: MarkBitmap::new(width as usize * height as usize) }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn marks(&self) -> &MarkBitmap {
        &self.marks
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let o = self.offset(x, y) * 3;
        Rgb([self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]])
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, color: Rgb) {
        let o = self.offset(x, y) * 3;
        self.pixels[o..o + 3].copy_from_slice(&color.0);
    }

    pub fn fill_rect(&mut self, rect: PixelRect, color: Rgb) {
        for y in rect.y_min..=rect.y_max {
            for x in rect.x_min..=rect.x_max {
                self.set_pixel(x, y, color);
            }
        }
    }

    pub fn is_marked(&self, x: u32, y: u32) -> bool {
        self.marks.get(self.offset(x, y))
    }

    pub fn marked_count(&self) -> usize {
        self.marks.count_ones()
    }

    pub fn clear_marks(&mut self) {
        self.marks.clear();
    }

    /// Visits the unmarked pixels of `rect` in row-major order.
    #[inline]
    pub fn for_each_unmarked(&self, rect: PixelRect, mut f: impl FnMut(Rgb)) {
        debug_assert!(rect.x_max < self.width && rect.y_max < self.height);
        for y in rect.y_min..=rect.y_max {
            let row = self.offset(0, y);
            for x in rect.x_min..=rect.x_max {
                let i = row + x as usize;
                if !self.marks.get(i) {
                    let o = i * 3;
                    f(Rgb([self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]));
                }
            }
        }
    }

    /// Colors of the unmarked pixels in `rect`, row-major. Marks are untouched.
    pub fn collect_unmarked(&self, rect: PixelRect) -> Vec<Rgb> {
        let mut out = Vec::with_capacity(rect.area());
        self.for_each_unmarked(rect, |c| out.push(c));
        out
    }

    /// Marks every pixel in `rect`, returning how many were newly marked.
    pub fn mark_rect(&mut self, rect: PixelRect) -> usize {
        debug_assert!(rect.x_max < self.width && rect.y_max < self.height);
        let mut newly = 0;
        for y in rect.y_min..=rect.y_max {
            let start = self.offset(rect.x_min, y);
            newly += self.marks.set_range(start, start + rect.width() as usize);
        }
        newly
    }
}

/// One input image with its camera.
#[derive(Debug, Clone)]
pub struct View {
    pub name: String,
    pub image: ImageView,
    pub camera: CameraModel,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub views: Vec<View>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, views: Vec<View>) -> Self {
        Dataset { name: name.into(), views }
    }

    pub fn cameras(&self) -> impl Iterator<Item = &CameraModel> {
        self.views.iter().map(|v| &v.camera)
    }

    pub fn clear_marks(&mut self) {
        for view in &mut self.views {
            view.image.clear_marks();
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Required size of every image; a decoded image of any other size is a
    /// [`IngestError::DimensionMismatch`].
    pub expected_size: Option<(u32, u32)>,
}

/// Loads a camera file and the images it names from `image_dir`.
pub fn load_dataset(camera_file: impl AsRef<Path>, image_dir: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    load_dataset_with(camera_file, image_dir, &LoadOptions::default())
}

pub fn load_dataset_with(
    camera_file: impl AsRef<Path>,
    image_dir: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<Dataset, IngestError> {
    let camera_file = camera_file.as_ref();
    let image_dir = image_dir.as_ref();
    let entries = load_camera_file(camera_file)?;
    let mut views = Vec::with_capacity(entries.len());
    for entry in entries {
        let path = image_dir.join(&entry.name);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(IngestError::MissingImage(entry.name));
            }
            Err(e) => {
                return Err(IngestError::Io { path: path.display().to_string(), message: e.to_string() });
            }
        };
        let image =
            decode_image(&bytes).map_err(|message| IngestError::Decode { name: entry.name.clone(), message })?;
        let found = (image.width(), image.height());
        if let Some(expected) = options.expected_size {
            if expected != found {
                return Err(IngestError::DimensionMismatch { name: entry.name, expected, found });
            }
        }
        let camera = CameraModel::new(entry.calibration, found.0, found.1)?;
        views.push(View { name: entry.name, image, camera });
    }
    let name = camera_file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    log::info!("loaded {} views from {}", views.len(), camera_file.display());
    Ok(Dataset::new(name, views))
}

/// Decodes binary PPM or 8-bit PNG (RGB or RGBA, alpha dropped), chosen by
/// magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<ImageView, String> {
    if bytes.starts_with(b"P6") {
        return decode_ppm(bytes);
    }
    if bytes.starts_with(b"\x89PNG") {
        let decoded =
            image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| e.to_string())?.into_rgb8();
        let (w, h) = decoded.dimensions();
        return ImageView::from_rgb(w, h, decoded.into_raw()).map_err(|e| e.to_string());
    }
    Err("unrecognised image format (expected binary PPM or PNG)".into())
}
