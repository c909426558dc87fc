//! Straight-line reference reconstruction: one voxel at a time in scan
//! order, with pixels of Strong voxels marked immediately. Candidates wait
//! for the end of their layer so they see the same Strong set as the
//! pipeline does. [`Marking::EndOfLayer`] defers all marking instead, which
//! isolates the one point where the pipeline deliberately differs.

use crate::consistency::{classify, mean_color, membership, resolve_candidate, thresholds, StrongSet, Verdict};
use crate::geometry::PixelRect;
use crate::grid::{build_sweep, VoxelCoord, VoxelGrid, VoxelState};
use crate::ingest::{Dataset, MarkBitmap};
use crate::pipeline::{PipelineError, ReconstructionConfig};
use crate::Rgb;

/// Grids larger than 8³ are refused.
pub const NAIVE_MAX_VOXELS: usize = 512;

/// A candidate waiting for the end of its layer: coordinate, mean color and
/// the footprints it would mark.
type Pending = (VoxelCoord, Rgb, Vec<(usize, PixelRect)>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Marking {
    /// Strong voxels mark their pixels before the next voxel is scored.
    #[default]
    Immediate,
    /// All marking waits until the layer is decided, as in the pipeline.
    EndOfLayer,
}

#[derive(Debug, Clone)]
pub struct NaiveOutcome {
    pub grid: VoxelGrid,
    /// Voxels whose footprint held a pixel marked earlier in the same layer.
    /// Only these can see different evidence than in the pipeline, which
    /// defers marking to the end of each layer.
    pub intra_layer_conflicts: Vec<VoxelCoord>,
}

pub fn naive_reference(dataset: &mut Dataset, config: &ReconstructionConfig) -> Result<NaiveOutcome, PipelineError> {
    naive_reference_with(dataset, config, Marking::Immediate)
}

pub fn naive_reference_with(
    dataset: &mut Dataset,
    config: &ReconstructionConfig,
    marking: Marking,
) -> Result<NaiveOutcome, PipelineError> {
    if dataset.views.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    config.validate()?;
    let mut grid = VoxelGrid::new(config.grid)?;
    if grid.len() > NAIVE_MAX_VOXELS {
        return Err(PipelineError::Config(format!(
            "naive reference is limited to {NAIVE_MAX_VOXELS} voxels, grid has {}",
            grid.len()
        )));
    }
    let order = build_sweep(&grid, dataset.cameras(), config.axis)?;
    dataset.clear_marks();

    let mut strong = StrongSet::new(&grid);
    let mut conflicts = Vec::new();

    for layer in order.layers() {
        let marks_at_layer_start: Vec<MarkBitmap> = dataset.views.iter().map(|v| v.image.marks().clone()).collect();
        let mut candidates: Vec<Pending> = Vec::new();
        let mut deferred: Vec<(usize, PixelRect)> = Vec::new();

        for coord in layer {
            let corners = grid.voxel_corners(coord)?;
            let mut pixels: Vec<Rgb> = Vec::new();
            let mut seen_in: Vec<(usize, PixelRect)> = Vec::new();
            let mut conflicted = false;

            for (v, view) in dataset.views.iter().enumerate() {
                let Some(rect) = view.camera.footprint(&corners) else { continue };
                let image = &view.image;
                for y in rect.y_min..=rect.y_max {
                    for x in rect.x_min..=rect.x_max {
                        let i = y as usize * image.width() as usize + x as usize;
                        if image.is_marked(x, y) && !marks_at_layer_start[v].get(i) {
                            conflicted = true;
                        }
                    }
                }
                let unmarked: Vec<Rgb> = image
                    .collect_unmarked(rect)
                    .into_iter()
                    .filter(|c| !config.black_threshold.is_some_and(|t| c.max_channel() <= t))
                    .collect();
                if !unmarked.is_empty() {
                    seen_in.push((v, rect));
                    pixels.extend(unmarked);
                }
            }
            if conflicted {
                conflicts.push(coord);
            }

            if pixels.is_empty() || seen_in.len() < config.min_views {
                grid.set_state(coord, VoxelState::Carved)?;
                continue;
            }
            let mu = membership(&pixels, config.trim_fraction)?;
            let t = match config.threshold_override {
                Some(t) => t,
                None => thresholds(seen_in.len())?,
            };
            match classify(mu, t) {
                Verdict::Strong => {
                    grid.set_state(coord, VoxelState::Colored(mean_color(&pixels)?))?;
                    strong.insert(&grid, coord);
                    match marking {
                        Marking::Immediate => {
                            for (v, rect) in seen_in {
                                dataset.views[v].image.mark_rect(rect);
                            }
                        }
                        Marking::EndOfLayer => deferred.extend(seen_in),
                    }
                }
                Verdict::Reject => grid.set_state(coord, VoxelState::Carved)?,
                Verdict::Candidate => candidates.push((coord, mean_color(&pixels)?, seen_in)),
            }
        }

        for (coord, color, seen_in) in candidates {
            if resolve_candidate(coord, &strong, &grid) {
                grid.set_state(coord, VoxelState::Colored(color))?;
                deferred.extend(seen_in);
            } else {
                grid.set_state(coord, VoxelState::Carved)?;
            }
        }
        for (v, rect) in deferred {
            dataset.views[v].image.mark_rect(rect);
        }
    }

    Ok(NaiveOutcome { grid, intra_layer_conflicts: conflicts })
}
