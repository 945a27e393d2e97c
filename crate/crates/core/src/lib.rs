//! Stereo disparity estimation by iterative coarse-to-fine residual refinement.
//!
//! A feature pyramid is built for each view. The coarsest scale gets a full
//! prediction from a classical matching head over a shallow symmetric cost
//! volume. Each finer scale warps the right features by the upsampled estimate
//! and predicts a signed residual. The finest estimate is then brought to full
//! resolution and optionally smoothed by a photometrically weighted joint
//! bilateral filter.
//!
//! ```
//! use stereo_core::{config::{validate_config, PipelineConfig}, pipeline::match_pair, synth};
//!
//! let pair = synth::generate(synth::Scene::Constant { disparity: 5.0 }, 96, 48, 3).unwrap();
//! let cfg = validate_config(&PipelineConfig::default()).unwrap();
//! assert_eq!(cfg.d_max(), 180.0);
//! let out = match_pair(&pair.left, &pair.right, &cfg).unwrap();
//! assert_eq!(out.disparity.width(), 96);
//! ```

pub mod bench;
pub mod coarse_to_fine;
pub mod config;
pub mod error;
pub mod head;
pub mod image;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod pyramid;
pub mod refine;
pub mod synth;

pub use config::{validate_config, PipelineConfig, ValidConfig};
pub use error::{ConfigError, Error, Result};
pub use image::{DisparityMap, PlanarImage};
pub use pipeline::{match_pair, MatchOutput};
