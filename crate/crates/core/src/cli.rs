//! The `omvid` command line.

use std::collections::BTreeMap;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::campaign::{
    frame_map, generate_scenes, reports_to_csv, scene_slic_config, video_map, CampaignConfig, FrameDetection,
    FrameTruth, SceneParams, Tube, TubeDetection, World,
};
use crate::datamodel::{
    load_video, parse_annotations, read_labels, read_uncertainty, write_labels, write_pseudolabels, CostKind,
    CostTable, DatasetSplit, Dims, SuperpixelLabels,
};
use crate::error::{bail, Error, Result};
use crate::pseudolabel::{build_pseudolabels, PseudoMode, WeightConfig};
use crate::selection::{
    fit_cost_table, frame_scores, plan_cost, select, video_uncertainty, AnnotationMix, BudgetConfig, Geometry, Policy,
    SelectionPlan,
};
use crate::superpixel::{segment, SlicConfig};

#[derive(Debug, Parser)]
#[command(name = "omvid", version, about = "Sparse-annotation tooling for video action detection")]
pub struct Cli {
    /// Worker threads for per-video parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// One of error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "info")]
    pub log_level: log::LevelFilter,

    /// Seed for every random choice (random selection, simulated scenes).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a PNG frame sequence into 3D superpixels (SPV1 output).
    Superpixel(SuperpixelArgs),
    /// Turn sparse annotations into per-frame pseudo-labels (JSON lines).
    Pseudolabel(PseudolabelArgs),
    /// Choose videos and frames to annotate next (plan JSON).
    Select(SelectArgs),
    /// Man-hours of a plan, or calibrate unit costs against observed totals.
    Cost(CostArgs),
    /// Run a simulated annotation campaign on synthetic videos.
    Simulate(SimulateArgs),
    /// Frame or video mAP of detections against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SuperpixelArgs {
    /// Directory of frame_000000.png, frame_000001.png, ...
    #[arg(long)]
    pub video: PathBuf,
    /// Seed spacing S in pixels.
    #[arg(long, default_value_t = 16)]
    pub interval: usize,
    /// Compactness weight m.
    #[arg(long, default_value_t = 10.0)]
    pub compactness: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    /// Temporal scale: seeds are `ceil(rho S)` frames apart.
    #[arg(long, default_value_t = 1.0)]
    pub temporal_scale: f64,
    /// Smallest region kept after connectivity repair (default S^2/4).
    #[arg(long)]
    pub min_region: Option<usize>,
    /// Output SPV1 file; its stem is taken as the video id when read back.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Superpixel,
    Scribblebox,
}

impl From<ModeArg> for PseudoMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Superpixel => PseudoMode::Superpixel,
            ModeArg::Scribblebox => PseudoMode::ScribbleBox,
        }
    }
}

#[derive(Debug, Args)]
pub struct PseudolabelArgs {
    /// Annotation JSON lines.
    #[arg(long)]
    pub annotations: PathBuf,
    /// SPV1 files named `<video_id>.spv`; repeat for several videos.
    #[arg(long)]
    pub superpixels: Vec<PathBuf>,
    /// Frame geometry `TxHxW` for videos without a superpixel file.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<Dims>,
    #[arg(long, value_enum, default_value = "superpixel")]
    pub mode: ModeArg,
    /// Weight decay per frame of distance to the nearest annotation.
    #[arg(long, default_value_t = 0.9)]
    pub decay: f64,
    /// Lowest weight any pseudo-labelled frame gets.
    #[arg(long, default_value_t = 0.1)]
    pub floor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Bucket,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeometryArg {
    Box,
    Mask,
}

impl From<GeometryArg> for Geometry {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Box => Geometry::Box,
            GeometryArg::Mask => Geometry::Mask,
        }
    }
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Percent of all videos to annotate with boxes (or masks).
    #[arg(long, default_value_t = 0.0)]
    pub box_pct: f64,
    /// Percent of all videos to annotate with scribbles.
    #[arg(long, default_value_t = 0.0)]
    pub scribble_pct: f64,
    /// Percent of all videos to tag only.
    #[arg(long, default_value_t = 0.0)]
    pub tag_pct: f64,
    #[arg(long, default_value_t = 2)]
    pub frames_box: usize,
    #[arg(long, default_value_t = 2)]
    pub frames_scribble: usize,
    /// Minimum distance between frames picked in one video.
    #[arg(long, default_value_t = 8)]
    pub min_gap: usize,
    #[arg(long, value_enum, default_value = "bucket")]
    pub policy: PolicyArg,
    /// Annotate the box bucket with boxes or with pixel masks.
    #[arg(long, value_enum, default_value = "box")]
    pub geometry: GeometryArg,
    /// Unit cost table: `default` or a JSON file with tag_s, point_s,
    /// scribble_s, box_s, mask_s.
    #[arg(long, default_value = "default")]
    pub costs: String,
}

impl BudgetArgs {
    fn budget(&self) -> BudgetConfig {
        BudgetConfig {
            box_pct: self.box_pct,
            scribble_pct: self.scribble_pct,
            tag_pct: self.tag_pct,
            frames_per_video_box: self.frames_box,
            frames_per_video_scribble: self.frames_scribble,
            min_frame_gap: self.min_gap,
        }
    }

    fn policy(&self, seed: u64) -> Policy {
        match self.policy {
            PolicyArg::Bucket => Policy::Bucket,
            PolicyArg::Random => Policy::Random { seed },
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Split JSON: {"round": n, "labeled": [...], "unlabeled": [...]}.
    #[arg(long)]
    pub split: PathBuf,
    /// Directory of UNC1 files named `<video_id>.unc`, one per unlabeled video.
    #[arg(long)]
    pub uncertainty: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Plan JSON to price.
    #[arg(long, conflicts_with = "fit", required_unless_present = "fit")]
    pub plan: Option<PathBuf>,
    /// Observations JSON, `[{"mix": {...}, "hours": h}, ...]`, to fit unit
    /// costs against.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Comma-separated costs to fit, e.g. `box,mask`; the rest stay as in
    /// --costs.
    #[arg(long, value_delimiter = ',', default_value = "box")]
    pub free: Vec<String>,
    #[arg(long, default_value = "default")]
    pub costs: String,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of synthetic videos.
    #[arg(long, default_value_t = 12)]
    pub scenes: usize,
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    /// Base detector noise; the last video gets twice this.
    #[arg(long, default_value_t = 0.25)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "superpixel")]
    pub mode: ModeArg,
    #[command(flatten)]
    pub budget: BudgetArgs,
    /// Report JSON, one entry per round.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a cost-versus-metric CSV table here.
    #[arg(long)]
    pub emit_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Frame,
    Video,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detections JSON array.
    #[arg(long)]
    pub detections: PathBuf,
    /// Ground-truth JSON array.
    #[arg(long)]
    pub ground_truth: PathBuf,
    #[arg(long, value_enum, default_value = "frame")]
    pub level: LevelArg,
    /// IoU thresholds, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5")]
    pub iou: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_dims(s: &str) -> std::result::Result<Dims, String> {
    let parts: Vec<usize> = s.split('x').map(|p| p.parse().map_err(|_| format!("bad dimension {p:?}"))).collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [t, h, w] => Dims::new(t, h, w).map_err(|e| e.to_string()),
        _ => Err("expected TxHxW".to_string()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn superpixel(a: &SuperpixelArgs) -> Result<()> {
    let video = load_video::<f64>(&a.video)?;
    let mut cfg = SlicConfig::new(a.interval, a.compactness);
    cfg.max_iters = a.iters;
    cfg.temporal_scale = a.temporal_scale;
    if let Some(r) = a.min_region {
        cfg.min_region = r;
    }
    let sp = segment(&video, &cfg)?;
    log::info!("{} superpixels over {:?}", sp.k(), video.dims());
    write_labels(&sp, &a.out)
}

fn pseudolabel(a: &PseudolabelArgs) -> Result<()> {
    let wc = WeightConfig::new(a.decay, a.floor)?;
    let mut sps: BTreeMap<String, SuperpixelLabels<f64>> = BTreeMap::new();
    for p in &a.superpixels {
        let sp = read_labels::<f64>(p)?;
        sps.insert(sp.video_id.clone(), sp);
    }
    let records = parse_annotations(&a.annotations, |v| sps.get(v).map(|s| s.dims).or(a.dims))?;
    let mode = PseudoMode::from(a.mode);
    let mut sets = Vec::with_capacity(records.len());
    for rec in &records {
        let sp = sps.get(&rec.video_id);
        let dims = sp.map(|s| s.dims).or(a.dims).expect("parse_annotations checked the geometry");
        let sp = if mode == PseudoMode::Superpixel { sp } else { None };
        let set = build_pseudolabels(rec, sp, dims, &wc, mode)?;
        log::info!("{}: {} pseudo-labelled frames", rec.video_id, set.frames.len());
        sets.push(set);
    }
    let mut buf = Vec::new();
    write_pseudolabels(&sets, &mut buf).map_err(|e| Error::io(&a.out, e))?;
    write_file(&a.out, &buf)
}

fn select_cmd(a: &SelectArgs, seed: u64) -> Result<()> {
    let split = DatasetSplit::load(&a.split)?;
    let costs = CostTable::load(&a.budget.costs)?;
    let mut scores = BTreeMap::new();
    let mut frames = BTreeMap::new();
    for v in split.unlabeled() {
        let path = a.uncertainty.join(format!("{v}.unc"));
        let uv = read_uncertainty::<f32>(&path)?;
        scores.insert(v.clone(), video_uncertainty(&uv)?);
        frames.insert(v.clone(), frame_scores(&uv)?);
    }
    let plan = select(
        &split,
        &scores,
        &frames,
        &a.budget.budget(),
        a.budget.policy(seed),
        a.budget.geometry.into(),
        &costs,
    )?;
    for e in plan.entries.iter().filter(|e| e.uniform_fallback) {
        log::warn!("{}: no frames {} apart, spread uniformly instead", e.video_id, a.budget.min_gap);
    }
    log::info!("{} videos selected, {:.3} hours", plan.entries.len(), plan.projected_cost_hours);
    write_file(&a.out, plan.to_json().as_bytes())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Observation {
    mix: MixJson,
    hours: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MixJson {
    tags: f64,
    point_frames: f64,
    scribble_frames: f64,
    box_frames: f64,
    mask_frames: f64,
}

#[derive(Debug, Serialize)]
struct FitReport {
    costs: CostTable,
    residual_hours: Vec<f64>,
}

fn cost(a: &CostArgs) -> Result<()> {
    let costs = CostTable::load(&a.costs)?;
    if let Some(plan) = &a.plan {
        let plan = SelectionPlan::load(plan)?;
        let hours = plan_cost(&plan, &costs);
        return emit(a.out.as_deref(), &format!("{hours:?} hours\n"));
    }
    let path = a.fit.as_ref().expect("clap requires --plan or --fit");
    let obs: Vec<Observation> = read_json(path)?;
    let obs: Vec<(AnnotationMix, f64)> = obs
        .into_iter()
        .map(|o| {
            let m = o.mix;
            let mix = AnnotationMix {
                tags: m.tags,
                point_frames: m.point_frames,
                scribble_frames: m.scribble_frames,
                box_frames: m.box_frames,
                mask_frames: m.mask_frames,
            };
            (mix, o.hours)
        })
        .collect();
    let free = a
        .free
        .iter()
        .map(|f| match CostKind::ALL.iter().find(|k| k.to_string() == *f) {
            Some(k) => Ok(*k),
            None => bail!(Config, "unknown cost kind {f:?}"),
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_cost_table(&obs, &costs, &free)?;
    let report = FitReport { costs: fit.table, residual_hours: fit.residuals };
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n"))
}

fn simulate(a: &SimulateArgs, seed: u64) -> Result<()> {
    let cfg = CampaignConfig {
        rounds: a.rounds,
        budget: a.budget.budget(),
        policy: a.budget.policy(seed),
        costs: CostTable::load(&a.budget.costs)?,
        weights: WeightConfig::default(),
        mode: a.mode.into(),
        geometry: a.budget.geometry.into(),
    };
    let reports = if a.rounds == 0 {
        Vec::new()
    } else {
        let scenes = generate_scenes(a.scenes, seed, &SceneParams::default())?;
        World::new(scenes, &scene_slic_config(), a.noise, seed)?.run(&cfg)?
    };
    for r in &reports {
        log::info!(
            "round {}: {} labeled, {:.4} h cumulative, pseudo IoU {:.4}",
            r.round,
            r.labeled_videos,
            r.cumulative_cost_hours,
            r.mean_pseudo_iou
        );
    }
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    write_file(&a.out, json.as_bytes())?;
    if let Some(csv) = &a.emit_csv {
        write_file(csv, reports_to_csv(&reports).as_bytes())?;
    }
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let mut out = BTreeMap::new();
    match a.level {
        LevelArg::Frame => {
            let dets: Vec<FrameDetection> = read_json(&a.detections)?;
            let gts: Vec<FrameTruth> = read_json(&a.ground_truth)?;
            for &tau in &a.iou {
                out.insert(format!("f_map@{tau}"), frame_map(&dets, &gts, tau)?);
            }
        }
        LevelArg::Video => {
            let dets: Vec<TubeDetection> = read_json(&a.detections)?;
            let gts: Vec<Tube> = read_json(&a.ground_truth)?;
            for &tau in &a.iou {
                out.insert(format!("v_map@{tau}"), video_map(&dets, &gts, tau)?);
            }
        }
    }
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&out).expect("map serializes") + "\n"))
}

/// Run one parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    log::info!(target: "config", "{cli:?}");
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(Config, "--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Superpixel(a) => superpixel(a),
        Command::Pseudolabel(a) => pseudolabel(a),
        Command::Select(a) => select_cmd(a, cli.seed),
        Command::Cost(a) => cost(a),
        Command::Simulate(a) => simulate(a, cli.seed),
        Command::Eval(a) => eval(a),
    }
}

/// Parse `args`, set up logging on standard error and run; returns the
/// process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // The resolved configuration is always logged, whatever the level.
    let _ = env_logger::Builder::new()
        .filter_level(cli.log_level)
        .filter_module("config", log::LevelFilter::Info)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            if cli.log_level < log::LevelFilter::Error {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}
