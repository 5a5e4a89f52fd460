use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use salwatch::io::{self as sio, FrameSource, RawHeader, RawWriter};
use salwatch::metrics::Evaluator;
use salwatch::synthgen::SceneRenderer;
use salwatch::{Frame, GroundTruth, Pipeline, PipelineConfig, SceneScript};

/// Salient-region tracking and suspicious-motion flagging for video frames.
#[derive(Parser, Debug)]
#[command(name = "salwatch", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a scene script to a raw frame stream plus ground truth.
    Render {
        /// Scene script (TOML).
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Print the default configuration in key = value form.
    Defaults,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Image directory or raw RGB stream.
    #[arg(long, required_unless_present = "seed_scene")]
    input: Option<PathBuf>,

    /// Render this scene script inline instead of reading --input; its
    /// ground truth is used unless --ground-truth is given.
    #[arg(long, conflicts_with = "input")]
    seed_scene: Option<PathBuf>,

    #[arg(long, default_value = "out")]
    output_dir: PathBuf,

    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Ground truth JSON for evaluation.
    #[arg(long)]
    ground_truth: Option<PathBuf>,

    /// Write per-frame saliency maps as grayscale PNG.
    #[arg(long)]
    emit_saliency: bool,

    /// Write report.json (implied when ground truth is available).
    #[arg(long)]
    emit_report: bool,

    /// Write track-memory snapshots to tracks.jsonl.
    #[arg(long)]
    emit_tracks: bool,

    /// Skip writing annotated frames.
    #[arg(long)]
    no_frames: bool,

    #[arg(long)]
    max_regions: Option<usize>,

    /// Extra `key=value` overrides, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Upscale factor for annotated frames.
    #[arg(long, default_value_t = 4)]
    annotate_scale: u32,
}

fn load_config(args: &RunArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        cfg.apply_text(&text)?;
    }
    for kv in &args.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("override `{kv}` is not key=value");
        };
        cfg.set(k.trim(), v)?;
    }
    if let Some(n) = args.max_regions {
        cfg.ior.max_regions = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("creating {}", args.output_dir.display()))?;

    let mut truth: Option<GroundTruth> = match &args.ground_truth {
        Some(p) => Some(
            sio::read_ground_truth(p)
                .with_context(|| format!("reading ground truth {}", p.display()))?,
        ),
        None => None,
    };

    let frames: Box<dyn Iterator<Item = salwatch::Result<Frame>>> = match (&args.input, &args.seed_scene)
    {
        (_, Some(script_path)) => {
            let renderer = scene_renderer(script_path)?;
            if truth.is_none() {
                truth = Some(renderer.truth());
            }
            Box::new((0..renderer.frame_count()).map(move |t| renderer.frame(t)))
        }
        (Some(input), None) => Box::new(
            FrameSource::open(input)
                .with_context(|| format!("opening input {}", input.display()))?,
        ),
        (None, None) => bail!("either --input or --seed-scene is required"),
    };

    let mut pipeline = Pipeline::new(cfg)?;
    let mut events_out = BufWriter::new(File::create(args.output_dir.join("events.jsonl"))?);
    let mut tracks_out = if args.emit_tracks {
        Some(BufWriter::new(File::create(args.output_dir.join("tracks.jsonl"))?))
    } else {
        None
    };
    let scaled_truth = truth.as_ref().map(|t| {
        let (w, h) = cfg.channels.working_dims(t.width, t.height);
        t.rescaled(w, h)
    });
    let mut evaluator = Evaluator::new(scaled_truth.as_ref());
    let mut n_frames = 0usize;
    let mut n_events = 0usize;

    for frame in frames {
        let frame = frame.context("decoding frame")?;
        let out = pipeline.process(&frame)?;
        let index = out.frame.index;

        sio::write_events(&mut events_out, &out.events)?;
        if let Some(w) = tracks_out.as_mut() {
            sio::write_tracks(w, index, pipeline.memory().records())?;
        }
        if !args.no_frames {
            let img = sio::annotate(
                &out.frame,
                &out.regions,
                &out.suspicious_boxes(),
                args.annotate_scale.max(1),
            );
            img.save(args.output_dir.join(format!("frame_{index:06}.png")))?;
        }
        if args.emit_saliency {
            sio::write_saliency_png(
                &args.output_dir.join(format!("saliency_{index:06}.png")),
                &out.saliency,
            )?;
        }
        evaluator.record_frame(
            out.frame.width() * out.frame.height(),
            out.kept_area(),
            &out.matches(),
            &out.events,
            out.bottom_up,
            out.total,
        );
        n_frames += 1;
        n_events += out.events.len();
    }
    events_out.flush()?;
    if let Some(mut w) = tracks_out {
        w.flush()?;
    }

    if scaled_truth.is_some() || args.emit_report {
        let report = evaluator.finish();
        sio::write_report(&args.output_dir.join("report.json"), &report)?;
        println!("{}", summary_line(&report));
    }
    eprintln!("processed {n_frames} frames, {n_events} suspicion events");
    Ok(())
}

fn summary_line(r: &salwatch::EvalReport) -> String {
    let score = r
        .match_score
        .map_or_else(|| "n/a".to_string(), |s| format!("{:.4}", s));
    format!(
        "frames={} match_score={} false_alert_rate={:.4} jumps={}/{} coverage={:.4} bottom_up_ms={:.3} total_ms={:.3}",
        r.frames,
        score,
        r.false_alert_rate,
        r.jumps_detected,
        r.jumps,
        r.mean_region_coverage,
        r.mean_bottom_up_ms,
        r.mean_total_ms
    )
}

fn scene_renderer(path: &Path) -> Result<SceneRenderer> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scene {}", path.display()))?;
    Ok(SceneRenderer::new(SceneScript::from_toml(&text)?)?)
}

fn render(script: &Path, output_dir: &Path) -> Result<()> {
    let renderer = scene_renderer(script)?;
    fs::create_dir_all(output_dir)?;
    let s = renderer.script();
    let header = RawHeader {
        width: s.width as u32,
        height: s.height as u32,
        frame_count: u32::try_from(s.frame_count).context("too many frames")?,
    };
    let mut w = RawWriter::create(&output_dir.join("frames.rgbp"), header)?;
    for t in 0..renderer.frame_count() {
        w.write_frame(&renderer.frame(t)?)?;
    }
    w.finish()?;
    sio::write_ground_truth(&output_dir.join("truth.json"), &renderer.truth())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Render { script, output_dir }) => render(script, output_dir),
        Some(Command::Defaults) => {
            print!("{}", PipelineConfig::default().to_text());
            Ok(())
        }
        None => run(&cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
