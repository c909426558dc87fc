use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use voxelhyst::evaluation::{evaluate, export_ply, grid_to_cloud, read_ply, EvalError, EvalParams};
use voxelhyst::geometry::{format_camera_file, load_camera_file, CameraEntry};
use voxelhyst::grid::{build_sweep, GridSpec, SweepAxis, VoxelGrid};
use voxelhyst::ingest::{encode_ppm, load_dataset, IngestError};
use voxelhyst::pipeline::PipelineError;
use voxelhyst::synth::{parse_scene, render};
use voxelhyst::{reconstruct, CameraModel, ReconstructionConfig, ThresholdPair, WorldPoint};

/// Volumetric reconstruction by voxel coloring with hysteresis
/// photo-consistency.
#[derive(Parser)]
#[command(name = "voxelhyst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct a colored voxel model from calibrated images.
    Reconstruct(ReconstructArgs),
    /// Render a synthetic scene to a camera file, images and a ground-truth cloud.
    Synth(SynthArgs),
    /// Compare a reconstruction with a ground-truth cloud.
    Eval(EvalArgs),
    /// Summarize a camera file and check which sweep axes a grid allows.
    Info(InfoArgs),
}

#[derive(Args)]
struct GridArgs {
    /// World position of the grid corner with the smallest coordinates.
    #[arg(long, value_name = "X,Y,Z", value_parser = triple::<f64>)]
    grid_origin: [f64; 3],
    #[arg(long, value_name = "S")]
    voxel_size: f64,
    #[arg(long, value_name = "NX,NY,NZ", value_parser = triple::<usize>)]
    dims: [usize; 3],
}

impl GridArgs {
    fn spec(&self) -> Result<GridSpec, Failure> {
        let [x, y, z] = self.grid_origin;
        GridSpec::new(WorldPoint::new(x, y, z), self.voxel_size, self.dims).map_err(Failure::input)
    }
}

#[derive(Args)]
struct ReconstructArgs {
    /// Camera parameter file.
    #[arg(long, value_name = "FILE")]
    cameras: PathBuf,
    /// Directory holding the images named in the camera file.
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Sweep direction; every camera must lie before the grid along it.
    #[arg(long, allow_hyphen_values = true)]
    axis: SweepAxis,
    /// Output PLY file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Fraction of values dropped from each end of every channel.
    #[arg(long, default_value_t = 0.1)]
    trim: f64,
    #[arg(long, default_value_t = 1)]
    min_views: usize,
    /// Ignore pixels whose channels are all at or below this value.
    #[arg(long, value_name = "V")]
    black_threshold: Option<u8>,
    /// Use fixed thresholds instead of the view-count schedule.
    #[arg(long, value_name = "LO,HI", value_parser = pair::<f64>)]
    fixed_thresholds: Option<(f64, f64)>,
    /// Write the run report as JSON.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Include per-layer timings in the report (makes it run-dependent).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene description file.
    #[arg(long, value_name = "FILE")]
    scene: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Standard deviation of per-channel Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Overrides the noise seed given in the scene.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    recon: PathBuf,
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
    #[arg(long, default_value_t = EvalParams::default().percentile)]
    percentile: f64,
    /// Completeness tolerance, in scaled units.
    #[arg(long, default_value_t = EvalParams::default().tol)]
    tol: f64,
    /// Factor from cloud units to reported units.
    #[arg(long, default_value_t = EvalParams::default().scale)]
    scale: f64,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long, value_name = "FILE")]
    cameras: PathBuf,
    #[arg(long, value_name = "X,Y,Z", value_parser = triple::<f64>, requires_all = ["voxel_size", "dims"])]
    grid_origin: Option<[f64; 3]>,
    #[arg(long, value_name = "S")]
    voxel_size: Option<f64>,
    #[arg(long, value_name = "NX,NY,NZ", value_parser = triple::<usize>)]
    dims: Option<[usize; 3]>,
}

fn split<T: FromStr>(s: &str, n: usize) -> Result<Vec<T>, String>
where
    T::Err: Display,
{
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated values, got {}", parts.len()));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|e| format!("{p:?}: {e}"))).collect()
}

fn triple<T: FromStr + Copy>(s: &str) -> Result<[T; 3], String>
where
    T::Err: Display,
{
    let v = split::<T>(s, 3)?;
    Ok([v[0], v[1], v[2]])
}

fn pair<T: FromStr + Copy>(s: &str) -> Result<(T, T), String>
where
    T::Err: Display,
{
    let v = split::<T>(s, 2)?;
    Ok((v[0], v[1]))
}

/// A one-line diagnostic and the process exit code that goes with it.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl Display) -> Self {
        Failure { code: 2, message: e.to_string() }
    }

    fn runtime(e: impl Display) -> Self {
        Failure { code: 1, message: e.to_string() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            e if e.is_visibility_violation() => 3,
            PipelineError::EmptyDataset | PipelineError::Config(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io { .. } => Failure::runtime(e),
            _ => Failure::input(e),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io { ref source, .. } if source.kind() != std::io::ErrorKind::NotFound => Failure::runtime(e),
            _ => Failure::input(e),
        }
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn Display| Failure::runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(bytes).map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

fn cmd_reconstruct(args: &ReconstructArgs) -> Result<(), Failure> {
    let mut config = ReconstructionConfig::new(args.grid.spec()?, args.axis);
    config.trim_fraction = args.trim;
    config.min_views = args.min_views;
    config.black_threshold = args.black_threshold;
    config.threads = args.threads;
    if let Some((lo, hi)) = args.fixed_thresholds {
        config.threshold_override = Some(ThresholdPair::fixed(lo, hi).map_err(Failure::input)?);
    }
    config.validate()?;

    let mut dataset = load_dataset(&args.cameras, &args.images)?;
    let (grid, report) = reconstruct(&mut dataset, &config)?;
    log::info!("{} of {} voxels colored", report.colored, report.total_voxels);

    if let Some(path) = &args.report {
        write_atomic(path, report.to_json(args.timings).as_bytes())?;
    }
    let cloud = grid_to_cloud(&grid).map_err(Failure::runtime)?;
    export_ply(&cloud, &args.out).map_err(Failure::runtime)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(Failure::input(format!("noise {} must be a finite non-negative number", args.noise)));
    }
    let text = std::fs::read_to_string(&args.scene)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", args.scene.display())))?;
    let mut scene = parse_scene(&text).map_err(Failure::input)?;
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", args.out.display())))?;

    let dataset = render(&scene, args.noise);
    for view in &dataset.views {
        write_atomic(&args.out.join(&view.name), &encode_ppm(&view.image))?;
    }
    let entries: Vec<CameraEntry> = scene
        .cameras
        .iter()
        .map(|(name, cam)| CameraEntry { name: name.clone(), calibration: cam.calibration().clone() })
        .collect();
    write_atomic(&args.out.join("scene_par.txt"), format_camera_file(&entries).as_bytes())?;
    let truth = scene.ground_truth();
    if truth.is_empty() {
        log::warn!("scene has no occupied voxels; no truth.ply written");
    } else {
        export_ply(&truth, args.out.join("truth.ply")).map_err(Failure::runtime)?;
    }

    let g = &scene.grid;
    println!(
        "--grid-origin {},{},{} --voxel-size {} --dims {},{},{} --axis {}",
        g.origin.x, g.origin.y, g.origin.z, g.voxel_size, g.dims[0], g.dims[1], g.dims[2], scene.axis
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let recon = read_ply(&args.recon)?;
    let truth = read_ply(&args.truth)?;
    let params = EvalParams { percentile: args.percentile, tol: args.tol, scale: args.scale };
    let m = evaluate(&recon, &truth, &params)?;
    println!("accuracy={} completeness={}", m.accuracy, m.completeness);
    Ok(())
}

fn cmd_info(args: &InfoArgs) -> Result<(), Failure> {
    let entries = load_camera_file(&args.cameras).map_err(Failure::input)?;
    println!("{} cameras", entries.len());
    for e in &entries {
        let c = e.calibration.center();
        println!("{} center {:.6} {:.6} {:.6}", e.name, c.x, c.y, c.z);
    }
    let (Some(origin), Some(voxel_size), Some(dims)) = (args.grid_origin, args.voxel_size, args.dims) else {
        return Ok(());
    };
    let grid = GridArgs { grid_origin: origin, voxel_size, dims }.spec()?;
    let grid = VoxelGrid::new(grid).map_err(Failure::input)?;
    // placement alone decides visibility; the image size is irrelevant here
    let cameras = entries
        .into_iter()
        .map(|e| CameraModel::new(e.calibration, 1, 1))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::input)?;
    for axis in SweepAxis::ALL {
        match build_sweep(&grid, &cameras, axis) {
            Ok(_) => println!("axis {axis}: ok"),
            Err(e) => println!("axis {axis}: {e}"),
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VOXELHYST_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Info(a) => cmd_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
