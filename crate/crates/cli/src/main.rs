use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stereo_core::bench::{run_bench, write_csv, BenchOptions, Resolution};
use stereo_core::coarse_to_fine::TraceSummary;
use stereo_core::config::{AggregatorKind, AggregatorParams, CostKind, PipelineConfig, RefinementKind};
use stereo_core::io::{read_disparity, read_image, render_colormap, write_disparity, write_rgb_png};
use stereo_core::metrics::{evaluate_with, SmoothL1};
use stereo_core::pipeline::{match_pair, with_threads};
use stereo_core::synth::{generate, write_sample, Scene};
use stereo_core::validate_config;

#[derive(Parser)]
#[command(name = "stereo", version, about = "Coarse-to-fine residual stereo matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the left-view disparity of a rectified pair.
    Match(MatchArgs),
    /// Compare a predicted disparity map with ground truth.
    Eval(EvalArgs),
    /// Time the pipeline on synthetic pairs at several resolutions.
    Bench(BenchArgs),
    /// Write a synthetic stereo pair with ground truth.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Head {
    Census,
    Sad,
    Ncc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Agg {
    None,
    Box,
    Sgm,
}

#[derive(Clone, Copy, ValueEnum)]
enum Refine {
    None,
    Photometric,
}

#[derive(Args)]
struct PipelineArgs {
    /// Candidates per cost volume (even).
    #[arg(long, default_value_t = 8)]
    dcv: u32,
    /// Scale denominators, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "24,12,6,3")]
    scales: Vec<u32>,
    #[arg(long, value_enum, default_value = "census")]
    head: Head,
    #[arg(long, value_enum, default_value = "sgm")]
    agg: Agg,
    #[arg(long, value_enum, default_value = "photometric")]
    refine: Refine,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            scale_dens: self.scales.clone(),
            d_cv: self.dcv,
            cost: match self.head {
                Head::Census => CostKind::Census,
                Head::Sad => CostKind::Sad,
                Head::Ncc => CostKind::Ncc,
            },
            aggregator: AggregatorParams::with_kind(match self.agg {
                Agg::None => AggregatorKind::None,
                Agg::Box => AggregatorKind::Box,
                Agg::Sgm => AggregatorKind::Sgm,
            }),
            refinement: match self.refine {
                Refine::None => RefinementKind::None,
                Refine::Photometric => RefinementKind::Photometric,
            },
            ..PipelineConfig::default()
        }
    }
}

#[derive(Args)]
struct MatchArgs {
    left: PathBuf,
    right: PathBuf,
    /// Disparity output; `.pfm` or KITTI `.png`. Repeat for both.
    #[arg(long, required = true)]
    out: Vec<PathBuf>,
    /// Colour rendering of the disparity (PNG).
    #[arg(long)]
    viz: Option<PathBuf>,
    /// Per-scale timings and cell counts (JSON).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SmoothL1Arg {
    Literal,
    Quadratic,
}

#[derive(Args)]
struct EvalArgs {
    pred: PathBuf,
    gt: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the report as a one-row CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "literal")]
    smooth_l1: SmoothL1Arg,
}

#[derive(Args)]
struct BenchArgs {
    /// KITTI, HD, 4K or WxH, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "KITTI,HD,4K")]
    resolutions: Vec<String>,
    #[arg(long, default_value_t = 100)]
    repetitions: usize,
    /// Untimed runs before the timed ones.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SceneKind {
    Constant,
    TwoPlane,
    Ramp,
    StepOcclusion,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    kind: SceneKind,
    /// WIDTHxHEIGHT.
    #[arg(long, default_value = "1248x384")]
    size: String,
    /// Constant scene disparity.
    #[arg(long, default_value_t = 20.0)]
    disparity: f32,
    #[arg(long, default_value_t = 10.0)]
    background: f32,
    #[arg(long, default_value_t = 40.0)]
    foreground: f32,
    #[arg(long, default_value_t = 5.0)]
    top: f32,
    #[arg(long, default_value_t = 30.0)]
    bottom: f32,
    #[arg(long, default_value_t = 10.0)]
    base: f32,
    #[arg(long, default_value_t = 15.0)]
    jump: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn cmd_match(a: MatchArgs) -> Result<()> {
    let cfg = validate_config(&a.pipeline.config())?;
    let left = read_image(&a.left).with_context(|| format!("reading {}", a.left.display()))?;
    let right = read_image(&a.right).with_context(|| format!("reading {}", a.right.display()))?;
    let out = with_threads(a.pipeline.threads, || match_pair(&left, &right, &cfg))??;
    for path in &a.out {
        write_disparity(&out.disparity, path).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.viz {
        let top = out.disparity.value_range().map_or(1.0, |(_, hi)| hi.max(1.0));
        write_rgb_png(&render_colormap(&out.disparity, top), path)?;
    }
    let summary: TraceSummary = out.trace.summary();
    if let Some(path) = &a.trace {
        write_json(&summary, path)?;
    }
    println!(
        "{}x{} d_max_budget {} total_cost_volume_cells {} time_ms {:.1}",
        out.disparity.width(),
        out.disparity.height(),
        summary.d_max_budget,
        summary.total_cost_volume_cells,
        out.total_time.as_secs_f64() * 1e3
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let pred = read_disparity(&a.pred).with_context(|| format!("reading {}", a.pred.display()))?;
    let gt = read_disparity(&a.gt).with_context(|| format!("reading {}", a.gt.display()))?;
    let variant = match a.smooth_l1 {
        SmoothL1Arg::Literal => SmoothL1::Literal,
        SmoothL1Arg::Quadratic => SmoothL1::Quadratic,
    };
    let report = evaluate_with(&pred, &gt, variant)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &a.out {
        write_json(&report, path)?;
    }
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_writer(File::create(path)?);
        w.serialize(&report)?;
        w.flush()?;
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let cfg = validate_config(&a.pipeline.config())?;
    let resolutions = a
        .resolutions
        .iter()
        .map(|s| s.parse::<Resolution>())
        .collect::<Result<Vec<_>, _>>()?;
    let opts = BenchOptions {
        repetitions: a.repetitions,
        warmup: a.warmup,
        seed: a.seed,
        memory_limit: None,
    };
    let rows = with_threads(a.pipeline.threads, || run_bench(&resolutions, &cfg, &opts))??;
    match &a.csv {
        Some(path) => write_csv(&rows, File::create(path)?)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let Some((w, h)) = s.split_once(['x', 'X']) else {
        bail!("size `{s}` must be WIDTHxHEIGHT");
    };
    Ok((w.parse().context("width")?, h.parse().context("height")?))
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let (w, h) = parse_size(&a.size)?;
    let scene = match a.kind {
        SceneKind::Constant => Scene::Constant { disparity: a.disparity },
        SceneKind::TwoPlane => Scene::TwoPlane {
            background: a.background,
            foreground: a.foreground,
        },
        SceneKind::Ramp => Scene::Ramp {
            top: a.top,
            bottom: a.bottom,
        },
        SceneKind::StepOcclusion => Scene::StepOcclusion {
            base: a.base,
            jump: a.jump,
        },
    };
    let sample = generate(scene, w, h, a.seed)?;
    write_sample(&sample, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Match(a) => cmd_match(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
