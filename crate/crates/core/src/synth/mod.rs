//! Synthetic scenes: a text format, random generators, a painter's-order
//! renderer and a deliberately naive reference reconstruction used as a test
//! oracle.

mod generate;
mod naive;
mod scene;

pub use generate::{isolated_scene, random_scene, rig_cameras, unit_grid, RigParams};
pub use naive::{naive_reference, naive_reference_with, Marking, NaiveOutcome, NAIVE_MAX_VOXELS};
pub use scene::{format_scene, parse_scene, SceneError};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::evaluation::PointCloud;
use crate::geometry::CameraModel;
use crate::grid::{build_sweep, GridError, GridSpec, SweepAxis, VoxelCoord, VoxelGrid};
use crate::ingest::{Dataset, ImageView, View};
use crate::pipeline::ReconstructionConfig;
use crate::Rgb;

/// Colored voxels inside a grid, seen by cameras on one side of it.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub grid: GridSpec,
    pub axis: SweepAxis,
    /// `(image name, camera)`; all cameras share one image size in the text
    /// format.
    pub cameras: Vec<(String, CameraModel)>,
    pub voxels: Vec<(VoxelCoord, Rgb)>,
    /// Seeds the noise generator.
    pub seed: u64,
}

impl SyntheticScene {
    /// Checks voxel bounds, duplicates and the camera placement.
    pub fn validate(&self) -> Result<(), SceneError> {
        let grid = VoxelGrid::new(self.grid)?;
        let mut seen = vec![false; grid.len()];
        for (c, _) in &self.voxels {
            if !grid.contains(*c) {
                return Err(GridError::OutOfBounds(*c).into());
            }
            let i = grid.index(*c);
            if std::mem::replace(&mut seen[i], true) {
                return Err(SceneError::Invalid(format!("voxel {c:?} listed twice")));
            }
        }
        if self.cameras.is_empty() {
            return Err(SceneError::Invalid("scene has no cameras".into()));
        }
        build_sweep(&grid, self.cameras.iter().map(|(_, c)| c), self.axis)?;
        Ok(())
    }

    /// A reconstruction config over the same grid and axis, defaults
    /// elsewhere.
    pub fn config(&self) -> ReconstructionConfig {
        ReconstructionConfig::new(self.grid, self.axis)
    }

    /// Occupied voxel centers with their colors.
    pub fn ground_truth(&self) -> PointCloud {
        let grid = VoxelGrid::new(self.grid).expect("scene grid was validated");
        let points = self.voxels.iter().filter_map(|(c, rgb)| grid.voxel_center(*c).ok().map(|p| (p, *rgb))).collect();
        PointCloud::new(points, "")
    }
}

/// Paints every occupied voxel's footprint, farthest layer first, over a
/// black background, then adds seeded Gaussian noise when `noise_sigma > 0`.
pub fn render(scene: &SyntheticScene, noise_sigma: f64) -> Dataset {
    let grid = VoxelGrid::new(scene.grid).expect("scene grid must be valid");
    let dim = scene.axis.dimension();
    let mut order: Vec<&(VoxelCoord, Rgb)> = scene.voxels.iter().collect();
    // far to near along the sweep, grid index order within a layer
    order.sort_by_key(|(c, _)| {
        let depth = if scene.axis.is_positive() { c[dim] } else { grid.dims()[dim] - 1 - c[dim] };
        (std::cmp::Reverse(depth), grid.index(*c))
    });

    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
    let noise = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("finite sigma"));
    let views = scene
        .cameras
        .iter()
        .map(|(name, camera)| {
            let mut image = ImageView::filled(camera.width(), camera.height(), Rgb::BLACK);
            for (c, rgb) in &order {
                let corners = grid.voxel_corners(*c).expect("scene voxels are in bounds");
                if let Some(rect) = camera.footprint(&corners) {
                    image.fill_rect(rect, *rgb);
                }
            }
            if let Some(noise) = &noise {
                for v in image.pixels_mut() {
                    let noisy = f64::from(*v) + noise.sample(&mut rng);
                    *v = noisy.round().clamp(0.0, 255.0) as u8;
                }
            }
            View { name: name.clone(), image, camera: camera.clone() }
        })
        .collect();
    Dataset::new("synthetic", views)
}
