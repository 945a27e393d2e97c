//! Pipeline configuration, its validation, and the disparity-budget arithmetic.
//!
//! Scales are stored as integer denominators: a level with `scale_den = 24`
//! has `1/24` of the padded input resolution. A disparity of `d` pixels at that
//! level corresponds to `d * 24` pixels at full resolution.

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Matching cost used by the prediction head. Also selects the per-level features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Census,
    Sad,
    Ncc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorKind {
    None,
    Box,
    Sgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementKind {
    None,
    Photometric,
}

/// Only reflect padding is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PadPolicy {
    #[default]
    Reflect,
}

/// Only clamp-to-edge sampling is implemented for warps and right-view lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WarpBoundary {
    #[default]
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatorParams {
    pub kind: AggregatorKind,
    pub box_radius: usize,
    /// Penalty for a one-step disparity change along an SGM path (normalized cost units).
    pub sgm_p1: f32,
    /// Penalty for larger jumps.
    pub sgm_p2: f32,
    pub filter_iterations: usize,
}

impl Default for AggregatorParams {
    fn default() -> Self {
        Self {
            kind: AggregatorKind::Sgm,
            box_radius: 2,
            sgm_p1: 0.5,
            sgm_p2: 4.0,
            filter_iterations: 3,
        }
    }
}

impl AggregatorParams {
    pub fn with_kind(kind: AggregatorKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (p1, p2) = (self.sgm_p1, self.sgm_p2);
        if !(p1.is_finite() && p2.is_finite() && p1 >= 0.0 && p2 >= p1) {
            return Err(ConfigError::InvalidPenalties { p1, p2 });
        }
        if self.filter_iterations == 0 {
            return Err(ConfigError::ZeroFilterIterations);
        }
        Ok(())
    }
}

/// Constants of the classical refinement stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub spatial_sigma: f32,
    pub range_sigma: f32,
    /// Photometric error at which a pixel's filter weight halves.
    pub photometric_scale: f32,
    /// Left-right agreement threshold in full-resolution pixels.
    pub lr_tolerance: f32,
    /// Sampling stride inside the bilateral window.
    pub window_stride: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            spatial_sigma: 9.0,
            range_sigma: 0.1,
            photometric_scale: 0.005,
            lr_tolerance: 1.0,
            window_stride: 3,
        }
    }
}

impl RefineParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f32| v.is_finite() && v > 0.0;
        if !positive(self.spatial_sigma) {
            return Err(ConfigError::InvalidRefineParam("spatial_sigma"));
        }
        if !positive(self.range_sigma) {
            return Err(ConfigError::InvalidRefineParam("range_sigma"));
        }
        if !positive(self.photometric_scale) {
            return Err(ConfigError::InvalidRefineParam("photometric_scale"));
        }
        if !(self.lr_tolerance.is_finite() && self.lr_tolerance >= 0.0) {
            return Err(ConfigError::InvalidRefineParam("lr_tolerance"));
        }
        if self.window_stride == 0 {
            return Err(ConfigError::InvalidRefineParam("window_stride"));
        }
        Ok(())
    }
}

pub const DEFAULT_SOFTMAX_SCALE: f32 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Coarse to fine, strictly decreasing.
    pub scale_dens: Vec<u32>,
    /// Candidates per pixel in every cost volume.
    pub d_cv: u32,
    pub cost: CostKind,
    pub aggregator: AggregatorParams,
    /// Inverse softmax temperature applied to aggregated costs (which live
    /// roughly in `[0, 1]`) before regression.
    pub softmax_scale: f32,
    pub refinement: RefinementKind,
    pub refine: RefineParams,
    pub pad_policy: PadPolicy,
    pub warp_boundary: WarpBoundary,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scale_dens: vec![24, 12, 6, 3],
            d_cv: 8,
            cost: CostKind::Census,
            aggregator: AggregatorParams::default(),
            softmax_scale: DEFAULT_SOFTMAX_SCALE,
            refinement: RefinementKind::Photometric,
            refine: RefineParams::default(),
            pad_policy: PadPolicy::Reflect,
            warp_boundary: WarpBoundary::Clamp,
        }
    }
}

impl PipelineConfig {
    pub fn coarsest_den(&self) -> u32 {
        self.scale_dens[0]
    }

    pub fn finest_den(&self) -> u32 {
        *self.scale_dens.last().expect("validated config has scales")
    }
}

/// A configuration that passed [`validate_config`], with its reachable range.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    config: PipelineConfig,
    d_max: f64,
}

impl ValidConfig {
    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn into_inner(self) -> PipelineConfig {
        self.config
    }
}

impl std::ops::Deref for ValidConfig {
    type Target = PipelineConfig;

    fn deref(&self) -> &PipelineConfig {
        &self.config
    }
}

fn check_candidate_count(d_cv: u32) -> Result<(), ConfigError> {
    if d_cv % 2 != 0 {
        return Err(ConfigError::OddCandidateCount(d_cv));
    }
    if d_cv < 2 {
        return Err(ConfigError::CandidateCountTooSmall(d_cv));
    }
    Ok(())
}

/// Largest full-resolution disparity reachable by accumulating one residual of
/// `d_cv / 2` at every scale: `sum_i (d_cv / 2) * scale_den_i`.
pub fn d_max_budget(d_cv: u32, scale_dens: &[u32]) -> Result<f64, ConfigError> {
    check_candidate_count(d_cv)?;
    if scale_dens.is_empty() {
        return Err(ConfigError::EmptyScales);
    }
    let half = f64::from(d_cv / 2);
    Ok(scale_dens.iter().map(|&s| half * f64::from(s)).sum())
}

/// Converts a disparity measured at `1/from_den` resolution to `1/to_den` resolution.
pub fn rescale_disparity_value(d: f64, from_den: u32, to_den: u32) -> f64 {
    d * f64::from(from_den) / f64::from(to_den)
}

pub fn validate_config(cfg: &PipelineConfig) -> Result<ValidConfig, ConfigError> {
    check_candidate_count(cfg.d_cv)?;
    if cfg.scale_dens.is_empty() {
        return Err(ConfigError::EmptyScales);
    }
    if cfg.scale_dens.contains(&0) {
        return Err(ConfigError::ZeroScale);
    }
    for pair in cfg.scale_dens.windows(2) {
        let (coarse, fine) = (pair[0], pair[1]);
        if coarse <= fine {
            return Err(ConfigError::ScalesNotDecreasing { coarse, fine });
        }
        if coarse % fine != 0 {
            return Err(ConfigError::NonIntegerScaleRatio { coarse, fine });
        }
    }
    if !(cfg.softmax_scale.is_finite() && cfg.softmax_scale > 0.0) {
        return Err(ConfigError::InvalidSoftmaxScale(cfg.softmax_scale));
    }
    cfg.aggregator.validate()?;
    cfg.refine.validate()?;
    let d_max = d_max_budget(cfg.d_cv, &cfg.scale_dens)?;
    Ok(ValidConfig {
        config: cfg.clone(),
        d_max,
    })
}
