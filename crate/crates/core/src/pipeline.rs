//! The voxel coloring loop.
//!
//! Layers are processed strictly in sweep order. Within a layer every voxel
//! is first scored against the current marks (in parallel), candidates are
//! then resolved against the Strong voxels of this and all previous layers,
//! and finally the footprints of accepted voxels are marked. Voxels of one
//! layer therefore never hide pixels from each other, which keeps the result
//! independent of the order and parallelism used inside a layer.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::consistency::{
    classify, mean_color, membership, resolve_candidate, ConsistencyError, MembershipScore, StrongSet, ThresholdPair,
    ThresholdSchedule, Verdict, DEFAULT_TRIM_FRACTION,
};
use crate::geometry::PixelRect;
use crate::grid::{build_sweep, GridError, GridSpec, SweepAxis, SweepOrder, VoxelCoord, VoxelGrid, VoxelState};
use crate::ingest::Dataset;
use crate::Rgb;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset has no views")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Consistency(#[from] ConsistencyError),
}

impl PipelineError {
    pub fn is_visibility_violation(&self) -> bool {
        matches!(self, PipelineError::Grid(GridError::VisibilityConstraintViolation { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub grid: GridSpec,
    pub axis: SweepAxis,
    pub trim_fraction: f64,
    /// Pixels whose channels are all at or below this value are ignored.
    pub black_threshold: Option<u8>,
    /// Replaces the view-count-dependent thresholds.
    pub threshold_override: Option<ThresholdPair>,
    pub min_views: usize,
    /// Worker threads for scoring; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl ReconstructionConfig {
    pub fn new(grid: GridSpec, axis: SweepAxis) -> Self {
        ReconstructionConfig {
            grid,
            axis,
            trim_fraction: DEFAULT_TRIM_FRACTION,
            black_threshold: None,
            threshold_override: None,
            min_views: 1,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.grid.validate()?;
        if !(0.0..0.5).contains(&self.trim_fraction) {
            return Err(PipelineError::Config(format!("trim fraction {} must lie in [0, 0.5)", self.trim_fraction)));
        }
        if self.min_views < 1 {
            return Err(PipelineError::Config("min_views must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(PipelineError::Config("thread count must be at least 1".into()));
        }
        if let Some(t) = self.threshold_override {
            ThresholdPair::fixed(t.t_low, t.t_high)?;
        }
        Ok(())
    }

    pub(crate) fn schedule(&self, max_views: usize) -> ThresholdSchedule {
        match self.threshold_override {
            Some(pair) => ThresholdSchedule::fixed(pair),
            None => ThresholdSchedule::adaptive(max_views),
        }
    }

    #[inline]
    pub(crate) fn is_excluded(&self, c: Rgb) -> bool {
        self.black_threshold.is_some_and(|t| c.max_channel() <= t)
    }
}

/// Final classification of one voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Strong,
    Rescued,
    Rejected,
    FailedCandidate,
    /// No unmarked pixels, or fewer contributing views than `min_views`.
    NoEvidence,
}

impl Decision {
    pub fn is_accepted(self) -> bool {
        matches!(self, Decision::Strong | Decision::Rescued)
    }
}

/// How one voxel was decided, and from what.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelDecision {
    pub coord: VoxelCoord,
    pub decision: Decision,
    pub score: Option<MembershipScore>,
    pub color: Option<Rgb>,
    /// Footprints in the views that contributed at least one pixel.
    pub evidence: Vec<(usize, PixelRect)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DecisionCounts {
    pub strong: usize,
    pub rescued: usize,
    pub rejected: usize,
    pub failed_candidates: usize,
    pub no_evidence: usize,
}

impl DecisionCounts {
    pub fn record(&mut self, d: Decision) {
        match d {
            Decision::Strong => self.strong += 1,
            Decision::Rescued => self.rescued += 1,
            Decision::Rejected => self.rejected += 1,
            Decision::FailedCandidate => self.failed_candidates += 1,
            Decision::NoEvidence => self.no_evidence += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.strong + self.rescued + self.rejected + self.failed_candidates + self.no_evidence
    }

    fn add(&mut self, other: &DecisionCounts) {
        self.strong += other.strong;
        self.rescued += other.rescued;
        self.rejected += other.rejected;
        self.failed_candidates += other.failed_candidates;
        self.no_evidence += other.no_evidence;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerReport {
    pub layer: usize,
    /// Grid index along the sweep axis.
    pub slice: usize,
    #[serde(flatten)]
    pub counts: DecisionCounts,
    pub newly_marked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_us: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub dims: [usize; 3],
    pub axis: SweepAxis,
    pub views: usize,
    pub total_voxels: usize,
    #[serde(flatten)]
    pub counts: DecisionCounts,
    pub colored: usize,
    pub layers: Vec<LayerReport>,
}

impl RunReport {
    /// Copy with per-layer timings removed; what remains is a deterministic
    /// function of the inputs.
    pub fn without_timing(&self) -> RunReport {
        let mut out = self.clone();
        for layer in &mut out.layers {
            layer.elapsed_us = None;
        }
        out
    }

    /// Pretty JSON with a fixed key order.
    pub fn to_json(&self, include_timing: bool) -> String {
        let report = if include_timing { self.clone() } else { self.without_timing() };
        let mut s = serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
        s.push('\n');
        s
    }
}

/// Everything decided in one layer.
#[derive(Debug, Clone)]
pub struct LayerOutcome {
    pub report: LayerReport,
    pub decisions: Vec<VoxelDecision>,
}

/// A reconstruction that can be advanced one layer at a time.
pub struct Reconstruction<'a> {
    dataset: &'a mut Dataset,
    config: ReconstructionConfig,
    grid: VoxelGrid,
    order: SweepOrder,
    strong: StrongSet,
    schedule: ThresholdSchedule,
    next_layer: usize,
    layers: Vec<LayerReport>,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Reconstruction<'a> {
    /// Validates the configuration and sweep, and clears all marks.
    pub fn new(dataset: &'a mut Dataset, config: &ReconstructionConfig) -> Result<Self, PipelineError> {
        if dataset.views.is_empty() {
            return Err(PipelineError::EmptyDataset);
        }
        config.validate()?;
        let grid = VoxelGrid::new(config.grid)?;
        let order = build_sweep(&grid, dataset.cameras(), config.axis)?;
        let pool = match config.threads {
            Some(n) => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| PipelineError::Config(format!("cannot start thread pool: {e}")))?,
            ),
            None => None,
        };
        dataset.clear_marks();
        Ok(Reconstruction {
            strong: StrongSet::new(&grid),
            schedule: config.schedule(dataset.views.len()),
            layers: Vec::with_capacity(order.layer_count()),
            dataset,
            config: config.clone(),
            grid,
            order,
            next_layer: 0,
            pool,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn dataset(&self) -> &Dataset {
        self.dataset
    }

    pub fn order(&self) -> &SweepOrder {
        &self.order
    }

    pub fn is_done(&self) -> bool {
        self.next_layer >= self.order.layer_count()
    }

    /// Processes the next layer, or returns `None` when all are done.
    pub fn step(&mut self) -> Option<Result<LayerOutcome, PipelineError>> {
        if self.is_done() {
            return None;
        }
        let result = match self.pool.take() {
            Some(pool) => {
                let r = pool.install(|| self.process_layer());
                self.pool = Some(pool);
                r
            }
            None => self.process_layer(),
        };
        Some(result)
    }

    pub fn run(mut self) -> Result<(VoxelGrid, RunReport), PipelineError> {
        while let Some(outcome) = self.step() {
            outcome?;
        }
        Ok(self.finish())
    }

    /// Consumes the run. Layers not yet processed stay `Unknown`.
    pub fn finish(self) -> (VoxelGrid, RunReport) {
        let mut counts = DecisionCounts::default();
        for layer in &self.layers {
            counts.add(&layer.counts);
        }
        let report = RunReport {
            dims: self.grid.dims(),
            axis: self.order.axis(),
            views: self.dataset.views.len(),
            total_voxels: self.grid.len(),
            colored: self.grid.colored_count(),
            counts,
            layers: self.layers,
        };
        (self.grid, report)
    }

    fn process_layer(&mut self) -> Result<LayerOutcome, PipelineError> {
        let started = Instant::now();
        let layer = self.next_layer;
        let coords = self.order.layer_coords(layer);

        // score every voxel against the marks left by previous layers
        let dataset: &Dataset = self.dataset;
        let grid = &self.grid;
        let config = &self.config;
        let schedule = &self.schedule;
        let mut decisions = coords
            .par_iter()
            .map_init(Vec::new, |buf, &c| score_voxel(dataset, grid, config, schedule, c, buf))
            .collect::<Result<Vec<_>, _>>()?;

        for d in &decisions {
            if d.decision == Decision::Strong {
                self.strong.insert(&self.grid, d.coord);
            }
        }

        // settle candidates against the frozen Strong set
        let strong = &self.strong;
        decisions.par_iter_mut().filter(|d| d.decision == Decision::FailedCandidate).for_each(|d| {
            if resolve_candidate(d.coord, strong, grid) {
                d.decision = Decision::Rescued;
            }
        });

        let mut counts = DecisionCounts::default();
        for d in &decisions {
            counts.record(d.decision);
            let state = match (d.decision.is_accepted(), d.color) {
                (true, Some(rgb)) => VoxelState::Colored(rgb),
                _ => VoxelState::Carved,
            };
            self.grid.set_state(d.coord, state)?;
        }

        let decisions_ref = &decisions;
        let newly_marked: usize = self
            .dataset
            .views
            .par_iter_mut()
            .enumerate()
            .map(|(v, view)| {
                decisions_ref
                    .iter()
                    .filter(|d| d.decision.is_accepted())
                    .flat_map(|d| d.evidence.iter())
                    .filter(|(ev, _)| *ev == v)
                    .map(|(_, rect)| view.image.mark_rect(*rect))
                    .sum::<usize>()
            })
            .sum();

        let elapsed = started.elapsed();
        log::debug!(
            "layer {layer}: {} strong, {} rescued, {} rejected, {} failed, {} without evidence, {newly_marked} pixels marked in {elapsed:?}",
            counts.strong,
            counts.rescued,
            counts.rejected,
            counts.failed_candidates,
            counts.no_evidence
        );
        let report = LayerReport {
            layer,
            slice: self.order.slice_index(layer),
            counts,
            newly_marked,
            elapsed_us: Some(elapsed.as_micros() as u64),
        };
        self.layers.push(report.clone());
        self.next_layer += 1;
        Ok(LayerOutcome { report, decisions })
    }
}

/// Scores one voxel. Candidates come back as `FailedCandidate` until
/// resolved.
fn score_voxel(
    dataset: &Dataset,
    grid: &VoxelGrid,
    config: &ReconstructionConfig,
    schedule: &ThresholdSchedule,
    coord: VoxelCoord,
    pixels: &mut Vec<Rgb>,
) -> Result<VoxelDecision, PipelineError> {
    let corners = grid.voxel_corners(coord)?;
    pixels.clear();
    let mut evidence = Vec::new();
    for (v, view) in dataset.views.iter().enumerate() {
        let Some(rect) = view.camera.footprint(&corners) else { continue };
        let before = pixels.len();
        view.image.for_each_unmarked(rect, |c| {
            if !config.is_excluded(c) {
                pixels.push(c);
            }
        });
        if pixels.len() > before {
            evidence.push((v, rect));
        }
    }
    let n_views = evidence.len();
    if pixels.is_empty() || n_views < config.min_views {
        return Ok(VoxelDecision { coord, decision: Decision::NoEvidence, score: None, color: None, evidence });
    }
    let mu = membership(pixels, config.trim_fraction)?;
    let decision = match classify(mu, schedule.get(n_views)?) {
        Verdict::Strong => Decision::Strong,
        Verdict::Reject => Decision::Rejected,
        Verdict::Candidate => Decision::FailedCandidate,
    };
    let color = match decision {
        Decision::Rejected => None,
        _ => Some(mean_color(pixels)?),
    };
    Ok(VoxelDecision {
        coord,
        decision,
        score: Some(MembershipScore { mu, n_views, n_pixels: pixels.len() }),
        color,
        evidence,
    })
}

/// Runs the full sweep over `dataset`, whose marks are reset first.
pub fn reconstruct(
    dataset: &mut Dataset,
    config: &ReconstructionConfig,
) -> Result<(VoxelGrid, RunReport), PipelineError> {
    Reconstruction::new(dataset, config)?.run()
}
