use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use thermotouch::eval::{detect_corpus, score_corpus, EVENTS_FILE, REPORT_FILE, ROIS_FILE};
use thermotouch::frames_io::{read_sequence, write_sequence};
use thermotouch::hand_detect::{analyze_sequence, FingertipConfig, PreprocessConfig, TipFallback};
use thermotouch::stabilize::{stabilize_sequence, write_transforms_json, DEFAULT_REF_TOL};
use thermotouch::synth::{generate, make_corpus, read_scene, write_clip, CorpusRecipe};
use thermotouch::touch_events::{
    detect_from_analyses, write_events_jsonl, write_rois_json, DetectorConfig, PipelineConfig,
};
use thermotouch::trace::{build_trace, trace_decay_check, write_traces_json, TraceConfig};

mod annotate;

const TRANSFORMS_FILE: &str = "transforms.json";
const TRACES_FILE: &str = "traces.json";

#[derive(Parser)]
#[command(name = "thermotouch", version, about = "Touch, hover and trace detection on thermal frame sequences")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect touch and hover events in a sequence or a whole corpus
    Detect(DetectArgs),
    /// Reconstruct finger traces from residual heat
    Trace(TraceArgs),
    /// Remove camera jitter using a colored marker in the RGB stream
    Stabilize(StabilizeArgs),
    /// Render synthetic clips with ground truth
    Synth(SynthArgs),
    /// Score detection results against corpus ground truth
    Eval(EvalArgs),
}

#[derive(Args)]
struct HandFlags {
    #[arg(long, default_value_t = 1.0)]
    blur_sigma: f64,
    #[arg(long, default_value_t = 2)]
    blur_radius: u32,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Minimum convexity-defect depth, pixels
    #[arg(long, default_value_t = 8.0)]
    depth_thresh: f64,
    #[arg(long, default_value_t = 150.0)]
    min_hand_area: f64,
    /// Area floor for hand fragments at the frame border
    #[arg(long, default_value_t = 10.0)]
    min_edge_area: f64,
    #[arg(long, default_value_t = 5.0)]
    merge_radius: f64,
    #[arg(long, value_enum, default_value_t = Fallback::Top)]
    tip_fallback: Fallback,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    Top,
    Bottom,
    Left,
    Right,
}

impl HandFlags {
    fn preprocess(&self) -> PreprocessConfig {
        PreprocessConfig {
            blur_sigma: self.blur_sigma,
            blur_radius: self.blur_radius,
            threshold: self.threshold,
        }
    }

    fn fingertips(&self) -> FingertipConfig {
        FingertipConfig {
            depth_thresh: self.depth_thresh,
            min_hand_area: self.min_hand_area,
            min_edge_area: self.min_edge_area,
            merge_radius: self.merge_radius,
            fallback: match self.tip_fallback {
                Fallback::Top => TipFallback::Top,
                Fallback::Bottom => TipFallback::Bottom,
                Fallback::Left => TipFallback::Left,
                Fallback::Right => TipFallback::Right,
            },
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Sequence directory
    #[arg(long = "in", conflicts_with = "corpus", required_unless_present = "corpus")]
    input: Option<PathBuf>,
    /// Corpus directory with a manifest; results go to <out>/<clip>/
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    hand: HandFlags,
    #[arg(long, default_value_t = 24)]
    roi_size: u32,
    #[arg(long, default_value_t = 0.03)]
    tau_mean: f64,
    /// Minimum warm-blob area, pixels
    #[arg(long, default_value_t = 9.0)]
    tau_area: f64,
    #[arg(long, default_value_t = 1.0)]
    diff_blur_sigma: f64,
    #[arg(long, default_value_t = 2)]
    debounce: usize,
    /// Also write annotated frames to <out>/annotated/
    #[arg(long, conflicts_with = "corpus")]
    annotate: bool,
}

impl DetectArgs {
    fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            preprocess: self.hand.preprocess(),
            fingertips: self.hand.fingertips(),
            roi_size: self.roi_size,
            detector: DetectorConfig {
                tau_mean: self.tau_mean,
                tau_area: self.tau_area,
                diff_blur_sigma: self.diff_blur_sigma,
                debounce: self.debounce,
            },
        }
    }
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    hand: HandFlags,
    #[arg(long, default_value_t = 0.05)]
    residual_floor: f64,
    #[arg(long, default_value_t = 3)]
    baseline_frames: usize,
    #[arg(long, default_value_t = 2.0)]
    trace_sigma: f64,
    #[arg(long, default_value_t = 3)]
    persistence: usize,
    #[arg(long, default_value_t = 5)]
    hand_margin: u32,
    #[arg(long, default_value_t = 8)]
    min_cluster_px: usize,
    #[arg(long, default_value_t = 4)]
    min_stamp_px: usize,
    #[arg(long, default_value_t = 3)]
    decay_frames: usize,
    #[arg(long, default_value_t = 0.02)]
    decay_margin: f64,
    /// Keep traces that fail the decay check
    #[arg(long)]
    keep_static: bool,
}

#[derive(Args)]
struct StabilizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Marker color as R,G,B
    #[arg(long, value_parser = parse_rgb, default_value = "250,220,0")]
    ref_color: [u8; 3],
    /// Per-channel color tolerance
    #[arg(long, default_value_t = DEFAULT_REF_TOL)]
    ref_tol: u8,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Split25,
    Corpus100,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus recipe (JSON)
    #[arg(long, group = "source")]
    recipe: Option<PathBuf>,
    /// Built-in corpus recipe
    #[arg(long, value_enum, group = "source")]
    preset: Option<Preset>,
    /// Single scene (JSON)
    #[arg(long, group = "source")]
    scene: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed of the recipe or scene
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    results: PathBuf,
    /// Report path (default: <results>/report.json)
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_rgb(s: &str) -> Result<[u8; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r, g, b] = parts.as_slice() else {
        return Err(format!("expected R,G,B, got {s:?}"));
    };
    let c = |v: &str| v.parse::<u8>().map_err(|e| format!("{v:?}: {e}"));
    Ok([c(r)?, c(g)?, c(b)?])
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let cfg = args.pipeline();
    cfg.validate()?;
    if let Some(corpus) = &args.corpus {
        let manifest = detect_corpus(corpus, &args.out, &cfg)?;
        println!("detected {} clips into {}", manifest.clips.len(), args.out.display());
        return Ok(());
    }
    let input = args.input.as_deref().expect("clap requires --in without --corpus");
    let seq = read_sequence(input)?;
    let analyses = analyze_sequence(&seq.thermal, &cfg.preprocess, &cfg.fingertips)?;
    let (rois, events) = detect_from_analyses(&analyses, seq.meta.resolution(), &cfg)?;
    create_dir(&args.out)?;
    write_events_jsonl(args.out.join(EVENTS_FILE), &events)?;
    write_rois_json(args.out.join(ROIS_FILE), &rois)?;
    if args.annotate {
        annotate::write_annotated(&args.out.join("annotated"), &seq.thermal, &analyses, &rois, &events)?;
    }
    let touches = events.iter().filter(|e| e.is_touch()).count();
    println!(
        "{} regions, {} events ({} touch, {} hover)",
        rois.len(),
        events.len(),
        touches,
        events.len() - touches
    );
    Ok(())
}

fn cmd_trace(args: &TraceArgs) -> Result<()> {
    let cfg = TraceConfig {
        residual_floor: args.residual_floor,
        baseline_frames: args.baseline_frames,
        smooth_sigma: args.trace_sigma,
        persistence: args.persistence,
        hand_margin: args.hand_margin,
        min_cluster_px: args.min_cluster_px,
        min_stamp_px: args.min_stamp_px,
        decay_frames: args.decay_frames,
        decay_margin: args.decay_margin,
    };
    let (pre, tips) = (args.hand.preprocess(), args.hand.fingertips());
    pre.validate()?;
    tips.validate()?;
    let seq = read_sequence(&args.input)?;
    let analyses = analyze_sequence(&seq.thermal, &pre, &tips)?;
    let mut traces = build_trace(&analyses, &cfg)?;
    if !args.keep_static {
        let mut kept = Vec::with_capacity(traces.len());
        for t in traces {
            if trace_decay_check(&t, &analyses, &cfg)? {
                kept.push(t);
            }
        }
        traces = kept;
    }
    create_dir(&args.out)?;
    write_traces_json(&args.out.join(TRACES_FILE), &traces)?;
    for (i, t) in traces.iter().enumerate() {
        println!("trace {i}: {} points, {:.1} px", t.points.len(), t.length);
    }
    Ok(())
}

fn cmd_stabilize(args: &StabilizeArgs) -> Result<()> {
    let seq = read_sequence(&args.input)?;
    let Some(rgb) = seq.rgb.as_deref() else {
        bail!("{} has no RGB frames", args.input.display());
    };
    let out = stabilize_sequence(&seq.thermal, rgb, args.ref_color, args.ref_tol)?;
    write_sequence(&args.out, &seq.meta, &out.frames, Some(rgb))?;
    write_transforms_json(args.out.join(TRANSFORMS_FILE), &out.transforms)?;
    let lost = out.transforms.iter().filter(|t| !t.tracked).count();
    println!("stabilized {} frames ({} without marker)", out.frames.len(), lost);
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if let Some(path) = &args.scene {
        let mut scene = read_scene(path)?;
        if let Some(seed) = args.seed {
            scene.seed = seed;
        }
        let clip = generate(&scene)?;
        write_clip(&args.out, &clip)?;
        println!("wrote {} frames to {}", clip.frames.len(), args.out.display());
        return Ok(());
    }
    let mut recipe = match (&args.recipe, args.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str::<CorpusRecipe>(&text).with_context(|| format!("invalid recipe {}", path.display()))?
        }
        (None, Some(Preset::Split25)) => CorpusRecipe::split25(0),
        (None, Some(Preset::Corpus100)) => CorpusRecipe::corpus100(0),
        (None, None) => bail!("one of --recipe, --preset or --scene is required"),
    };
    if let Some(seed) = args.seed {
        recipe.seed = seed;
    }
    let manifest = make_corpus(&recipe, &args.out)?;
    println!("wrote {} clips to {}", manifest.clips.len(), args.out.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let report = score_corpus(&args.corpus, &args.results)?;
    let path = args.report.clone().unwrap_or_else(|| args.results.join(REPORT_FILE));
    report.write_json(&path)?;
    print!("{report}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match &cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Stabilize(a) => cmd_stabilize(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
