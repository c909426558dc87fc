//! Volumetric multi-view reconstruction by voxel coloring.
//!
//! Voxels are visited in a plane-sweep order that respects ordinal
//! visibility. Each voxel is projected into every view, the unmarked pixels
//! under its footprint are pooled, and a fuzzy membership degree is compared
//! against a pair of thresholds that tighten with the number of views that
//! see the voxel. Scores between the two thresholds are settled by
//! 26-connectivity to strongly consistent voxels.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: pinhole cameras, projection and voxel footprints.
//! * [`ingest`]: images, per-pixel marks and camera-file loading.
//! * [`grid`]: the voxel grid, neighborhoods and sweep ordering.
//! * [`consistency`]: membership, adaptive thresholds and hysteresis.
//! * [`pipeline`]: the reconstruction loop.
//! * [`synth`]: synthetic scenes, a renderer and a naive reference.
//! * [`evaluation`]: point clouds, PLY I/O, accuracy and completeness.

pub mod consistency;
pub mod evaluation;
pub mod geometry;
pub mod grid;
pub mod ingest;
pub mod pipeline;
pub mod synth;

mod color;

pub use color::Rgb;
pub use consistency::{MembershipScore, ThresholdPair, Verdict};
pub use evaluation::PointCloud;
pub use geometry::{CameraModel, PixelRect, WorldPoint};
pub use grid::{SweepAxis, VoxelGrid, VoxelState};
pub use ingest::{Dataset, ImageView};
pub use pipeline::{reconstruct, ReconstructionConfig, RunReport};
