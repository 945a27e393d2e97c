//! Full-resolution refinement of the finest cascade output.
//!
//! Upsamples to input resolution, drops pixels that fail a left-right check,
//! fills them from the farther neighbouring surface, then runs one joint
//! bilateral pass guided by the left luminance in which pixels with a large
//! photometric error get little say.

use rayon::prelude::*;

use crate::coarse_to_fine::{upsample_disparity, warp_features};
use crate::config::{RefineParams, RefinementKind, ValidConfig};
use crate::error::{Error, Result};
use crate::image::{DisparityMap, PlanarImage};
use crate::pyramid::PadRecord;

/// `|L(x) - R(x - d(x))|` on luminance, with the right view linearly resampled.
pub fn photometric_error(
    left: &PlanarImage,
    right: &PlanarImage,
    d_full: &DisparityMap,
) -> Result<PlanarImage> {
    if !left.same_shape(right) {
        return Err(Error::ShapeMismatch("left and right images differ".into()));
    }
    let (l, r) = (left.luminance()?, right.luminance()?);
    let warped = warp_features(&r, d_full)?;
    let data = l
        .plane(0)
        .iter()
        .zip(warped.plane(0))
        .map(|(a, b)| (a - b).abs())
        .collect();
    PlanarImage::new(l.width(), l.height(), 1, data)
}

/// Valid where the right-view disparity found at `x - d_left(x)` (nearest
/// sample) agrees with `d_left(x)` to within `tol`. `d_right` holds positive
/// disparities of the right view: right pixel `x'` matches left `x' + d_right`.
pub fn lr_consistency_mask(d_left: &DisparityMap, d_right: &DisparityMap, tol: f32) -> Vec<bool> {
    assert!(d_left.same_size(d_right), "left/right disparity maps differ in size");
    let w = d_left.width();
    (0..d_left.values().len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            if !d_left.is_valid(x, y) {
                return false;
            }
            let dl = d_left.get(x, y);
            let xr = (x as f32 - dl).round();
            if !(0.0..w as f32).contains(&xr) {
                return false;
            }
            let xr = xr as usize;
            d_right.is_valid(xr, y) && (dl - d_right.get(xr, y)).abs() <= tol
        })
        .collect()
}

/// Fills invalid pixels with the smaller of the nearest valid values to their
/// left and right on the same row. Rows without any valid pixel are left as is.
pub fn background_fill(values: &[f32], mask: &[bool], width: usize) -> (Vec<f32>, Vec<bool>) {
    let mut out = values.to_vec();
    let mut valid = mask.to_vec();
    out.par_chunks_mut(width)
        .zip(valid.par_chunks_mut(width))
        .for_each(|(row, ok)| {
            let mut left = vec![None; width];
            let mut last = None;
            for x in 0..width {
                if ok[x] {
                    last = Some(row[x]);
                }
                left[x] = last;
            }
            let mut right = None;
            for x in (0..width).rev() {
                if ok[x] {
                    right = Some(row[x]);
                    continue;
                }
                let fill = match (left[x], right) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                if let Some(v) = fill {
                    row[x] = v;
                    ok[x] = true;
                }
            }
        });
    (out, valid)
}

/// One pass of joint bilateral filtering of `values`, guided by `guide`, with
/// an extra per-sample confidence `weights`. Convex combination of inputs.
pub fn joint_bilateral(
    values: &[f32],
    guide: &[f32],
    weights: &[f32],
    width: usize,
    height: usize,
    params: &RefineParams,
) -> Vec<f32> {
    let stride = params.window_stride;
    let radius = ((2.0 * params.spatial_sigma).ceil() as usize).div_ceil(stride) * stride;
    let (stride, radius) = (stride as isize, radius as isize);
    let offsets: Vec<isize> = (-radius..=radius).step_by(stride as usize).collect();
    let inv_s = 1.0 / (2.0 * params.spatial_sigma * params.spatial_sigma);
    let inv_r = 1.0 / (2.0 * params.range_sigma * params.range_sigma);
    let spatial: Vec<Vec<f32>> = offsets
        .iter()
        .map(|dy| {
            offsets
                .iter()
                .map(|dx| (-((dx * dx + dy * dy) as f32) * inv_s).exp())
                .collect()
        })
        .collect();

    let mut out = vec![0.0f32; values.len()];
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, o) in row.iter_mut().enumerate() {
                let center = guide[y * width + x];
                let (mut acc, mut norm) = (0.0f32, 0.0f32);
                let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
                for (iy, dy) in offsets.iter().enumerate() {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= height as isize {
                        continue;
                    }
                    let base = sy as usize * width;
                    for (ix, dx) in offsets.iter().enumerate() {
                        let sx = x as isize + dx;
                        if sx < 0 || sx >= width as isize {
                            continue;
                        }
                        let j = base + sx as usize;
                        let dg = guide[j] - center;
                        let wt = spatial[iy][ix] * (-dg * dg * inv_r).exp() * weights[j];
                        if wt > 0.0 {
                            acc += wt * values[j];
                            norm += wt;
                            lo = lo.min(values[j]);
                            hi = hi.max(values[j]);
                        }
                    }
                }
                // rounding can step an ulp outside the contributing samples
                *o = if norm > 0.0 {
                    (acc / norm).clamp(lo, hi)
                } else {
                    values[y * width + x]
                };
            }
        });
    out
}

/// Brings the finest-scale estimate to the original input resolution.
///
/// `left`/`right` are the padded full-resolution images the pyramids were
/// built from. `d_right_finest` is the right-view estimate at the finest scale
/// (positive disparities) and is required for photometric refinement.
pub fn refine_full(
    d_finest: &DisparityMap,
    d_right_finest: Option<&DisparityMap>,
    left: &PlanarImage,
    right: &PlanarImage,
    pad: &PadRecord,
    cfg: &ValidConfig,
) -> Result<DisparityMap> {
    let up = upsample_disparity(d_finest, 1)?;
    if up.width() != left.width() || up.height() != left.height() {
        return Err(Error::ShapeMismatch(format!(
            "upsampled disparity {}x{} vs image {}x{}",
            up.width(),
            up.height(),
            left.width(),
            left.height()
        )));
    }
    let crop = |d: DisparityMap| d.crop(pad.original_width, pad.original_height);
    if cfg.refinement == RefinementKind::None {
        return Ok(crop(up));
    }
    let d_right = d_right_finest.ok_or_else(|| {
        Error::InvalidArgument("photometric refinement needs the right-view disparity".into())
    })?;
    let up_right = upsample_disparity(d_right, 1)?;
    if !up_right.same_size(&up) {
        return Err(Error::ShapeMismatch("left/right disparity sizes differ".into()));
    }

    let params = &cfg.refine;
    let (w, h) = (up.width(), up.height());
    let mask = lr_consistency_mask(&up, &up_right, params.lr_tolerance);
    let (filled, valid) = background_fill(up.values(), &mask, w);
    let filled = DisparityMap::new(w, h, 1, filled, valid.clone())?;

    let err = photometric_error(left, right, &filled)?;
    let confidence: Vec<f32> = err
        .plane(0)
        .iter()
        .map(|e| 1.0 / (1.0 + e / params.photometric_scale))
        .collect();
    let guide = left.luminance()?;
    let smoothed = joint_bilateral(filled.values(), guide.plane(0), &confidence, w, h, params);

    // rows with nothing valid keep the raw upsampled values
    let values = smoothed
        .iter()
        .zip(up.values())
        .zip(&valid)
        .map(|((s, u), ok)| if *ok { *s } else { *u })
        .collect();
    let valid = valid
        .iter()
        .zip(up.valid())
        .map(|(a, b)| *a || *b)
        .collect();
    Ok(crop(DisparityMap::new(w, h, 1, values, valid)?))
}
