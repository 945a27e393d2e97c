use thiserror::Error;

/// A violated configuration invariant. Each rule has its own variant so callers
/// (and the CLI) can report exactly which one failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("d_cv must be even (got {0})")]
    OddCandidateCount(u32),
    #[error("d_cv must be at least 2 (got {0})")]
    CandidateCountTooSmall(u32),
    #[error("scale set is empty")]
    EmptyScales,
    #[error("scale denominators must be positive")]
    ZeroScale,
    #[error("scale denominators must be strictly decreasing ({coarse} then {fine})")]
    ScalesNotDecreasing { coarse: u32, fine: u32 },
    #[error("non-integer scale ratio ({coarse}/{fine})")]
    NonIntegerScaleRatio { coarse: u32, fine: u32 },
    #[error("sgm penalties must satisfy p2 >= p1 >= 0 (p1 = {p1}, p2 = {p2})")]
    InvalidPenalties { p1: f32, p2: f32 },
    #[error("filter_iterations must be at least 1")]
    ZeroFilterIterations,
    #[error("softmax scale must be positive and finite (got {0})")]
    InvalidSoftmaxScale(f32),
    #[error("refinement parameter `{0}` must be positive and finite")]
    InvalidRefineParam(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("buffer length {actual} does not match {width}x{height}x{channels}")]
    BufferLength {
        width: usize,
        height: usize,
        channels: usize,
        actual: usize,
    },
    #[error("image contains non-finite values")]
    NonFinite,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension must be even for 2x downsampling (got {width}x{height})")]
    OddDimension { width: usize, height: usize },
    #[error("image dimensions {width}x{height} are not divisible by {factor}")]
    NotDivisible {
        width: usize,
        height: usize,
        factor: usize,
    },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),
    #[error("scale ratio {from}/{to} is not a positive integer")]
    NonIntegralRatio { from: u32, to: u32 },
    #[error("no valid ground-truth pixels")]
    EmptyGroundTruth,
    #[error("length mismatch: {0} values vs {1} weights")]
    LengthMismatch(usize, usize),
    #[error("smooth-L1 input must be non-negative (got {0})")]
    NegativeInput(f64),
    #[error("disparity {disparity} exceeds image width {width}")]
    DisparityTooLarge { disparity: f32, width: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Pfm(#[from] crate::io::pfm::PfmError),
    #[error(transparent)]
    Kitti(#[from] crate::io::kitti::KittiError),
    #[error("image decode: {0}")]
    Decode(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
