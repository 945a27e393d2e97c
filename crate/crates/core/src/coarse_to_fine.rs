//! Iterative coarse-to-fine residual refinement.
//!
//! The coarsest level gets a full prediction. Every finer level upsamples the
//! running estimate, warps the right features by it, predicts what is left
//! (the residual, which may be negative) and adds it on. Because each level
//! searches only `d_cv` candidates around the warped estimate, the cost volumes
//! stay shallow while the reachable range grows with every scale.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{d_max_budget, ValidConfig};
use crate::error::{Error, Result};
use crate::head::MatchHead;
use crate::image::{DisparityMap, PlanarImage};
use crate::pyramid::FeaturePyramid;

/// State of one level after its residual was accumulated.
#[derive(Debug, Clone)]
pub struct ScaleRecord {
    pub scale_den: u32,
    pub disparity: DisparityMap,
    /// Head output at this level. At the coarsest level without an initial
    /// estimate this is the full prediction.
    pub residual: DisparityMap,
    pub head_time: Duration,
    pub total_time: Duration,
    pub cost_volume_cells: usize,
}

#[derive(Debug, Clone)]
pub struct CascadeTrace {
    pub d_max: f64,
    /// Coarse to fine, one record per configured scale.
    pub scales: Vec<ScaleRecord>,
}

impl CascadeTrace {
    pub fn total_cells(&self) -> usize {
        self.scales.iter().map(|s| s.cost_volume_cells).sum()
    }

    pub fn finest_cells(&self) -> usize {
        self.scales.last().map_or(0, |s| s.cost_volume_cells)
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            d_max_budget: self.d_max,
            total_cost_volume_cells: self.total_cells(),
            scales: self
                .scales
                .iter()
                .map(|s| ScaleSummary {
                    scale_den: s.scale_den,
                    width: s.disparity.width(),
                    height: s.disparity.height(),
                    cost_volume_cells: s.cost_volume_cells,
                    head_ms: s.head_time.as_secs_f64() * 1e3,
                    total_ms: s.total_time.as_secs_f64() * 1e3,
                })
                .collect(),
        }
    }
}

/// Serializable view of a [`CascadeTrace`] without the disparity maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub d_max_budget: f64,
    pub total_cost_volume_cells: usize,
    pub scales: Vec<ScaleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub scale_den: u32,
    pub width: usize,
    pub height: usize,
    pub cost_volume_cells: usize,
    pub head_ms: f64,
    pub total_ms: f64,
}

/// Bilinear upsampling by the integer ratio `scale_den / to_den`, with values
/// multiplied by the same ratio.
///
/// Output sample `i` reads source coordinate `(i + 0.5) / r - 0.5`, clamped to
/// the map. Invalid source pixels do not contribute; the mask is upsampled by
/// nearest neighbour.
pub fn upsample_disparity(d: &DisparityMap, to_den: u32) -> Result<DisparityMap> {
    let from = d.scale_den();
    if to_den == 0 || from % to_den != 0 {
        return Err(Error::NonIntegralRatio { from, to: to_den });
    }
    let r = (from / to_den) as usize;
    let (w, h) = (d.width(), d.height());
    let (ow, oh) = (w * r, h * r);
    if r == 1 {
        return Ok(d.clone());
    }
    let scale = r as f32;
    let (vals, valid) = (d.values(), d.valid());
    let all_valid = valid.iter().all(|v| *v);

    let taps = |o: usize, n: usize| -> (usize, usize, f32) {
        let s = ((o as f32 + 0.5) / scale - 0.5).clamp(0.0, (n - 1) as f32);
        let i0 = s.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, s - i0 as f32)
    };
    let xtaps: Vec<_> = (0..ow).map(|x| taps(x, w)).collect();

    let mut out_vals = vec![0.0f32; ow * oh];
    let mut out_valid = vec![false; ow * oh];
    out_vals
        .par_chunks_mut(ow.max(1))
        .zip(out_valid.par_chunks_mut(ow.max(1)))
        .enumerate()
        .for_each(|(oy, (row, mask))| {
            let (y0, y1, fy) = taps(oy, h);
            for (ox, (o, m)) in row.iter_mut().zip(mask.iter_mut()).enumerate() {
                let (x0, x1, fx) = xtaps[ox];
                let idx = [y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1];
                let v = if all_valid {
                    let top = (1.0 - fx) * vals[idx[0]] + fx * vals[idx[1]];
                    let bot = (1.0 - fx) * vals[idx[2]] + fx * vals[idx[3]];
                    (1.0 - fy) * top + fy * bot
                } else {
                    let wts = [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy];
                    let (mut acc, mut norm) = (0.0f32, 0.0f32);
                    for (i, wt) in idx.iter().zip(wts) {
                        if valid[*i] && wt > 0.0 {
                            acc += wt * vals[*i];
                            norm += wt;
                        }
                    }
                    if norm > 0.0 {
                        acc / norm
                    } else {
                        0.0
                    }
                };
                *o = v * scale;
                *m = valid[(oy / r) * w + ox / r];
            }
        });
    DisparityMap::new(ow, oh, to_den, out_vals, out_valid)
}

/// Resamples every channel of `features` at `x - d(x, y)` with linear
/// interpolation along the row; samples past either end clamp to the edge.
pub fn warp_features(features: &PlanarImage, d: &DisparityMap) -> Result<PlanarImage> {
    let (w, h) = (features.width(), features.height());
    if d.width() != w || d.height() != h {
        return Err(Error::ShapeMismatch(format!(
            "features {w}x{h} vs disparity {}x{}",
            d.width(),
            d.height()
        )));
    }
    if w == 0 || h == 0 {
        return Ok(features.clone());
    }
    // (left tap, weight of right tap) per pixel, shared by all channels
    let taps: Vec<(u32, f32)> = d
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let x = (i % w) as f32;
            let v = if v.is_finite() { *v } else { 0.0 };
            let s = (x - v).clamp(0.0, (w - 1) as f32);
            let x0 = s.floor();
            (x0 as u32, s - x0)
        })
        .collect();
    let mut data = vec![0.0f32; features.data().len()];
    data.par_chunks_mut(w)
        .enumerate()
        .for_each(|(row_idx, out)| {
            let c = row_idx / h;
            let y = row_idx % h;
            let src = &features.plane(c)[y * w..(y + 1) * w];
            for (x, o) in out.iter_mut().enumerate() {
                let (x0, f) = taps[y * w + x];
                let x0 = x0 as usize;
                let x1 = (x0 + 1).min(w - 1);
                *o = (1.0 - f) * src[x0] + f * src[x1];
            }
        });
    PlanarImage::new(w, h, features.channels(), data)
}

/// Runs the cascade from a zero initial estimate.
pub fn run_cascade(
    left: &FeaturePyramid,
    right: &FeaturePyramid,
    cfg: &ValidConfig,
) -> Result<(DisparityMap, CascadeTrace)> {
    run_cascade_from(left, right, cfg, None)
}

/// Runs the cascade. With `initial`, the coarsest level is treated like any
/// other: the right features are warped by `initial` and only a residual is
/// predicted on top of it.
pub fn run_cascade_from(
    left: &FeaturePyramid,
    right: &FeaturePyramid,
    cfg: &ValidConfig,
    initial: Option<&DisparityMap>,
) -> Result<(DisparityMap, CascadeTrace)> {
    let head = MatchHead::new(cfg.cost, cfg.d_cv as usize, cfg.aggregator).with_softmax_scale(cfg.softmax_scale);
    let mut current: Option<DisparityMap> = initial.cloned();
    let mut records = Vec::with_capacity(cfg.scale_dens.len());

    for &den in &cfg.scale_dens {
        let (fl, fr) = match (left.level(den), right.level(den)) {
            (Some(l), Some(r)) => (&l.features, &r.features),
            _ => {
                return Err(Error::ShapeMismatch(format!(
                    "pyramid has no level at 1/{den}"
                )))
            }
        };
        if !fl.same_shape(fr) {
            return Err(Error::ShapeMismatch(format!(
                "left/right features differ at 1/{den}"
            )));
        }
        let started = Instant::now();
        let (disparity, residual, head_time) = match current.take() {
            None => {
                let t = Instant::now();
                let d = head.predict(fl, fr, den)?;
                (d.clone(), d, t.elapsed())
            }
            Some(prev) => {
                let up = if prev.scale_den() == den {
                    prev
                } else {
                    upsample_disparity(&prev, den)?
                };
                if up.width() != fl.width() || up.height() != fl.height() {
                    return Err(Error::ShapeMismatch(format!(
                        "estimate {}x{} vs features {}x{} at 1/{den}",
                        up.width(),
                        up.height(),
                        fl.width(),
                        fl.height()
                    )));
                }
                let warped = warp_features(fr, &up)?;
                let t = Instant::now();
                let res = head.predict(fl, &warped, den)?;
                let head_time = t.elapsed();
                let values = up
                    .values()
                    .iter()
                    .zip(res.values())
                    .map(|(a, b)| a + b)
                    .collect();
                let valid = up
                    .valid()
                    .iter()
                    .zip(res.valid())
                    .map(|(a, b)| *a && *b)
                    .collect();
                let sum = DisparityMap::new(up.width(), up.height(), den, values, valid)?;
                (sum, res, head_time)
            }
        };
        records.push(ScaleRecord {
            scale_den: den,
            cost_volume_cells: fl.plane_len() * cfg.d_cv as usize,
            disparity: disparity.clone(),
            residual,
            head_time,
            total_time: started.elapsed(),
        });
        current = Some(disparity);
    }

    let finest = current.expect("validated config has at least one scale");
    Ok((
        finest,
        CascadeTrace {
            d_max: cfg.d_max(),
            scales: records,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reachability {
    Sufficient {
        budget: f64,
    },
    Insufficient {
        budget: f64,
        shortfall: f64,
        suggested_d_cv: u32,
        suggested_budget: f64,
    },
}

/// Whether the configuration can reach `requested_d_max` full-resolution
/// pixels; if not, the smallest even `d_cv` that would.
pub fn reachability_check(cfg: &ValidConfig, requested_d_max: f64) -> Reachability {
    let budget = cfg.d_max();
    if budget >= requested_d_max {
        return Reachability::Sufficient { budget };
    }
    let per_half: u32 = cfg.scale_dens.iter().sum();
    let half = (requested_d_max / f64::from(per_half)).ceil().max(1.0) as u32;
    let suggested_d_cv = 2 * half;
    let suggested_budget =
        d_max_budget(suggested_d_cv, &cfg.scale_dens).expect("suggested d_cv is even and positive");
    Reachability::Insufficient {
        budget,
        shortfall: requested_d_max - budget,
        suggested_d_cv,
        suggested_budget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{validate_config, PipelineConfig};

    #[test]
    fn upsample_constant_doubles() {
        let d = DisparityMap::constant(3, 2, 24, 3.0);
        let u = upsample_disparity(&d, 12).unwrap();
        assert_eq!((u.width(), u.height(), u.scale_den()), (6, 4, 12));
        assert!(u.values().iter().all(|v| (v - 6.0).abs() < 1e-6));
    }

    #[test]
    fn upsample_scales_value_by_den_ratio() {
        let d = DisparityMap::constant(1, 1, 24, 12.0);
        let u = upsample_disparity(&d, 3).unwrap();
        assert_eq!((u.width(), u.height()), (8, 8));
        assert!(u.values().iter().all(|v| (v - 96.0).abs() < 1e-5));
    }

    #[test]
    fn upsample_bilinear_half_pixel_convention() {
        let d = DisparityMap::dense(2, 2, 6, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let u = upsample_disparity(&d, 3).unwrap();
        assert_eq!(u.get(0, 0), 0.0);
        assert_eq!(u.get(3, 0), 2.0);
        assert_eq!(u.get(0, 3), 4.0);
        assert_eq!(u.get(3, 3), 6.0);
        // interior sample (1, 1) reads source (0.25, 0.25): 0.75*0.75*0 + ... times 2
        let expected = 2.0 * (0.1875 * 1.0 + 0.1875 * 2.0 + 0.0625 * 3.0);
        assert!((u.get(1, 1) - expected).abs() < 1e-6);
    }

    #[test]
    fn upsample_rejects_fractional_ratio() {
        let d = DisparityMap::constant(2, 2, 12, 1.0);
        assert!(matches!(
            upsample_disparity(&d, 5),
            Err(Error::NonIntegralRatio { from: 12, to: 5 })
        ));
    }

    #[test]
    fn upsample_skips_invalid_sources() {
        let d = DisparityMap::new(2, 1, 2, vec![4.0, f32::NAN], vec![true, false]).unwrap();
        let u = upsample_disparity(&d, 1).unwrap();
        // the last column only sees the invalid source
        assert_eq!(u.values(), &[8.0, 8.0, 8.0, 0.0, 8.0, 8.0, 8.0, 0.0]);
        assert_eq!(u.valid(), &[true, true, false, false, true, true, false, false]);
    }

    fn ramp(w: usize, h: usize) -> PlanarImage {
        PlanarImage::from_fn(w, h, |x, _| x as f32)
    }

    #[test]
    fn warp_identity() {
        let f = ramp(7, 3);
        let out = warp_features(&f, &DisparityMap::constant(7, 3, 1, 0.0)).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn warp_unit_and_half_shift_of_ramp() {
        let f = ramp(8, 2);
        let out = warp_features(&f, &DisparityMap::constant(8, 2, 1, 1.0)).unwrap();
        assert_eq!(out.get(0, 0, 0), 0.0);
        for x in 1..8 {
            assert_eq!(out.get(0, x, 1), x as f32 - 1.0);
        }
        let out = warp_features(&f, &DisparityMap::constant(8, 2, 1, 0.5)).unwrap();
        for x in 1..8 {
            assert!((out.get(0, x, 0) - (x as f32 - 0.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn warp_shape_mismatch() {
        assert!(matches!(
            warp_features(&ramp(4, 4), &DisparityMap::constant(3, 4, 1, 0.0)),
            Err(Error::ShapeMismatch(_))
        ));
    }

    fn valid(d_cv: u32, dens: &[u32]) -> ValidConfig {
        validate_config(&PipelineConfig {
            d_cv,
            scale_dens: dens.to_vec(),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn reachability_examples() {
        assert_eq!(
            reachability_check(&valid(8, &[24, 12, 6, 3]), 180.0),
            Reachability::Sufficient { budget: 180.0 }
        );
        assert_eq!(
            reachability_check(&valid(4, &[48, 24, 12, 6, 3]), 192.0),
            Reachability::Insufficient {
                budget: 186.0,
                shortfall: 6.0,
                suggested_d_cv: 6,
                suggested_budget: 279.0
            }
        );
        assert_eq!(
            reachability_check(&valid(2, &[1]), 1.0),
            Reachability::Sufficient { budget: 1.0 }
        );
    }
}
