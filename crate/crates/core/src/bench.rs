//! Runtime versus resolution on synthetic pairs.
//!
//! CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `label` | resolution name (`KITTI`, `HD`, `4K` or `WxH`) |
//! | `width`, `height` | input size in pixels |
//! | `status` | `ok` or `did not fit` |
//! | `repetitions` | timed runs (warm-up excluded) |
//! | `mean_ms`, `std_ms` | wall time of a full `match_pair` call; sample std, 0 for one run |
//! | `peak_cost_volume_cells` | largest single cost volume (the finest scale) |
//! | `total_cost_volume_cells` | sum over all scales |
//! | `estimated_bytes` | analytic working-set estimate used for the fit check |
//! | `peak_rss_mb` | process high-water mark after the row, empty where unsupported |
//! | `per_scale_ms` | `den:ms` pairs of mean head time, coarse to fine, `;`-separated |
//!
//! Rows that did not fit leave the timing columns empty.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::ValidConfig;
use crate::error::{Error, Result};
use crate::pipeline::match_pair;
use crate::synth::{generate, Scene};

pub const STATUS_OK: &str = "ok";
pub const STATUS_DID_NOT_FIT: &str = "did not fit";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub label: String,
    pub width: usize,
    pub height: usize,
}

impl Resolution {
    pub fn new(label: impl Into<String>, width: usize, height: usize) -> Self {
        Self {
            label: label.into(),
            width,
            height,
        }
    }

    pub fn kitti() -> Self {
        Self::new("KITTI", 1242, 375)
    }

    pub fn hd() -> Self {
        Self::new("HD", 1280, 720)
    }

    pub fn uhd() -> Self {
        Self::new("4K", 3840, 2160)
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

impl FromStr for Resolution {
    type Err = Error;

    /// `KITTI`, `HD`, `4K` (case-insensitive) or `WIDTHxHEIGHT`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kitti" => return Ok(Self::kitti()),
            "hd" => return Ok(Self::hd()),
            "4k" | "uhd" => return Ok(Self::uhd()),
            _ => {}
        }
        let bad = || Error::InvalidArgument(format!("resolution `{s}` is not KITTI, HD, 4K or WxH"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let (w, h): (usize, usize) = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
        if w == 0 || h == 0 {
            return Err(bad());
        }
        Ok(Self::new(format!("{w}x{h}"), w, h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub width: usize,
    pub height: usize,
    pub status: String,
    pub repetitions: usize,
    pub mean_ms: Option<f64>,
    pub std_ms: Option<f64>,
    pub peak_cost_volume_cells: usize,
    pub total_cost_volume_cells: usize,
    pub estimated_bytes: u64,
    pub peak_rss_mb: Option<f64>,
    pub per_scale_ms: String,
}

impl BenchRow {
    pub fn fits(&self) -> bool {
        self.status == STATUS_OK
    }
}

/// Mean and sample standard deviation; the deviation of a single sample is 0.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn round_up(v: usize, m: usize) -> usize {
    v.div_ceil(m) * m
}

/// Exact cost-volume cell counts `(finest, total)` for an input size.
pub fn cell_counts(width: usize, height: usize, cfg: &ValidConfig) -> (usize, usize) {
    let m = cfg.coarsest_den() as usize;
    let (pw, ph) = (round_up(width, m), round_up(height, m));
    let per_scale: Vec<usize> = cfg
        .scale_dens
        .iter()
        .map(|&d| (pw / d as usize) * (ph / d as usize) * cfg.d_cv as usize)
        .collect();
    (*per_scale.last().unwrap_or(&0), per_scale.iter().sum())
}

/// Rough upper bound of the working set in bytes: cost volume plus its
/// aggregation buffers, three feature stacks at the finest scale and the
/// full-resolution images and refinement buffers.
pub fn estimate_bytes(width: usize, height: usize, cfg: &ValidConfig) -> u64 {
    let m = cfg.coarsest_den() as usize;
    let full = (round_up(width, m) * round_up(height, m)) as u64;
    let finest = full / u64::from(cfg.finest_den()).pow(2);
    let (cells, _) = cell_counts(width, height, cfg);
    4 * (6 * cells as u64 + 3 * 25 * finest + 24 * full)
}

fn meminfo_kb(key: &str) -> Option<u64> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    text.lines()
        .find(|l| l.starts_with(key))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()
}

/// Memory available to this process, where the platform reports it.
pub fn available_bytes() -> Option<u64> {
    meminfo_kb("MemAvailable:").map(|kb| kb * 1024)
}

/// Process resident high-water mark in MiB, where the platform reports it.
pub fn peak_rss_mb() -> Option<f64> {
    let text = std::fs::read_to_string("/proc/self/status").ok()?;
    let kb: f64 = text
        .lines()
        .find(|l| l.starts_with("VmHWM:"))?
        .split_whitespace()
        .nth(1)?
        .parse()
        .ok()?;
    Some(kb / 1024.0)
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub repetitions: usize,
    pub warmup: usize,
    pub seed: u64,
    /// Memory limit for the fit check; `None` queries the system.
    pub memory_limit: Option<u64>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            repetitions: 100,
            warmup: 1,
            seed: 0,
            memory_limit: None,
        }
    }
}

pub fn bench_resolution(res: &Resolution, cfg: &ValidConfig, opts: &BenchOptions) -> Result<BenchRow> {
    if opts.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let (peak, total) = cell_counts(res.width, res.height, cfg);
    let estimated = estimate_bytes(res.width, res.height, cfg);
    let mut row = BenchRow {
        label: res.label.clone(),
        width: res.width,
        height: res.height,
        status: STATUS_DID_NOT_FIT.into(),
        repetitions: 0,
        mean_ms: None,
        std_ms: None,
        peak_cost_volume_cells: peak,
        total_cost_volume_cells: total,
        estimated_bytes: estimated,
        peak_rss_mb: None,
        per_scale_ms: String::new(),
    };
    let limit = opts.memory_limit.or_else(available_bytes);
    if limit.is_some_and(|l| estimated > l) {
        return Ok(row);
    }

    let disparity = (res.width as f32 / 4.0).min(20.0).floor();
    let sample = generate(Scene::Constant { disparity }, res.width, res.height, opts.seed)?;
    for _ in 0..opts.warmup {
        match_pair(&sample.left, &sample.right, cfg)?;
    }
    let mut times = Vec::with_capacity(opts.repetitions);
    let mut head_ms = vec![0.0f64; cfg.scale_dens.len()];
    for _ in 0..opts.repetitions {
        let t = Instant::now();
        let out = match_pair(&sample.left, &sample.right, cfg)?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
        for (acc, s) in head_ms.iter_mut().zip(&out.trace.scales) {
            *acc += s.head_time.as_secs_f64() * 1e3;
        }
    }
    let (mean, std) = mean_std(&times);
    let n = opts.repetitions as f64;
    row.status = STATUS_OK.into();
    row.repetitions = opts.repetitions;
    row.mean_ms = Some(mean);
    row.std_ms = Some(std);
    row.peak_rss_mb = peak_rss_mb();
    row.per_scale_ms = cfg
        .scale_dens
        .iter()
        .zip(&head_ms)
        .map(|(d, ms)| format!("{d}:{:.3}", ms / n))
        .collect::<Vec<_>>()
        .join(";");
    Ok(row)
}

/// Benchmarks every resolution in order; resolutions that do not fit become
/// rows instead of errors.
pub fn run_bench(resolutions: &[Resolution], cfg: &ValidConfig, opts: &BenchOptions) -> Result<Vec<BenchRow>> {
    resolutions.iter().map(|r| bench_resolution(r, cfg, opts)).collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
