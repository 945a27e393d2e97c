//! Multi-scale feature pyramids built from classical per-pixel features.

use rayon::prelude::*;

use crate::config::{CostKind, ValidConfig};
use crate::error::{Error, Result};
use crate::image::PlanarImage;

/// Number of census comparisons in the 5x5 window (center excluded).
pub const CENSUS_BITS: usize = 24;
const CENSUS_RADIUS: isize = 2;

/// Size of an image before [`pad_to_multiple`], for cropping results back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadRecord {
    pub original_width: usize,
    pub original_height: usize,
    pub padded_width: usize,
    pub padded_height: usize,
}

impl PadRecord {
    pub fn is_identity(&self) -> bool {
        self.original_width == self.padded_width && self.original_height == self.padded_height
    }
}

#[derive(Debug, Clone)]
pub struct PyramidLevel {
    pub scale_den: u32,
    pub features: PlanarImage,
}

/// Feature maps of one view, ordered coarse to fine.
#[derive(Debug, Clone)]
pub struct FeaturePyramid {
    pub levels: Vec<PyramidLevel>,
    pub kind: CostKind,
    pub pad: PadRecord,
}

impl FeaturePyramid {
    pub fn level(&self, scale_den: u32) -> Option<&PyramidLevel> {
        self.levels.iter().find(|l| l.scale_den == scale_den)
    }
}

/// Mirror index into `[0, n)` without repeating the edge sample (`-1 -> 1`, `n -> n - 2`).
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

#[inline]
pub(crate) fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn round_up(v: usize, multiple: usize) -> usize {
    v.div_ceil(multiple) * multiple
}

/// Pads right and bottom with reflected samples up to the next multiple.
pub fn pad_to_multiple(img: &PlanarImage, multiple: usize) -> Result<(PlanarImage, PadRecord)> {
    if multiple == 0 {
        return Err(Error::InvalidArgument("pad multiple must be >= 1".into()));
    }
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("cannot pad an empty image".into()));
    }
    let (pw, ph) = (round_up(w, multiple), round_up(h, multiple));
    let record = PadRecord {
        original_width: w,
        original_height: h,
        padded_width: pw,
        padded_height: ph,
    };
    if pw == w && ph == h {
        return Ok((img.clone(), record));
    }
    let mut planes = Vec::with_capacity(img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        let mut out = Vec::with_capacity(pw * ph);
        for y in 0..ph {
            let sy = reflect_index(y as isize, h);
            let row = &src[sy * w..(sy + 1) * w];
            out.extend_from_slice(row);
            out.extend((w..pw).map(|x| row[reflect_index(x as isize, w)]));
        }
        planes.push(out);
    }
    Ok((PlanarImage::from_planes(pw, ph, planes)?, record))
}

/// Mean over non-overlapping `factor x factor` blocks, per channel.
pub fn downsample_block(img: &PlanarImage, factor: usize) -> Result<PlanarImage> {
    let (w, h) = (img.width(), img.height());
    if factor == 0 || w % factor != 0 || h % factor != 0 {
        return Err(Error::NotDivisible {
            width: w,
            height: h,
            factor,
        });
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (ow, oh) = (w / factor, h / factor);
    let norm = 1.0 / (factor * factor) as f32;
    let planes = (0..img.channels())
        .map(|c| {
            let src = img.plane(c);
            let mut out = vec![0.0f32; ow * oh];
            out.par_chunks_mut(ow.max(1))
                .enumerate()
                .for_each(|(oy, row)| {
                    for (ox, o) in row.iter_mut().enumerate() {
                        let mut acc = 0.0f32;
                        for dy in 0..factor {
                            let base = (oy * factor + dy) * w + ox * factor;
                            for v in &src[base..base + factor] {
                                acc += v;
                            }
                        }
                        *o = acc * norm;
                    }
                });
            out
        })
        .collect();
    PlanarImage::from_planes(ow, oh, planes)
}

/// Each output pixel is the mean of its 2x2 source block.
pub fn downsample_by_two(img: &PlanarImage) -> Result<PlanarImage> {
    if img.width() % 2 != 0 || img.height() % 2 != 0 {
        return Err(Error::OddDimension {
            width: img.width(),
            height: img.height(),
        });
    }
    downsample_block(img, 2)
}

/// 5x5 census bit-planes of a single-channel image.
///
/// Bit `k` enumerates the window in raster order skipping the center and is 1
/// iff that neighbor is strictly brighter than the center. Out-of-range
/// neighbors are clamped to the edge.
pub fn census_planes(lum: &PlanarImage) -> Vec<Vec<f32>> {
    let (w, h) = (lum.width(), lum.height());
    let src = lum.plane(0);
    let mut codes = vec![0u32; w * h];
    codes
        .par_chunks_mut(w.max(1))
        .enumerate()
        .for_each(|(y, row)| {
            for (x, code) in row.iter_mut().enumerate() {
                let center = src[y * w + x];
                let mut bits = 0u32;
                let mut k = 0;
                for dy in -CENSUS_RADIUS..=CENSUS_RADIUS {
                    let sy = clamp_index(y as isize + dy, h);
                    for dx in -CENSUS_RADIUS..=CENSUS_RADIUS {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let sx = clamp_index(x as isize + dx, w);
                        if src[sy * w + sx] > center {
                            bits |= 1 << k;
                        }
                        k += 1;
                    }
                }
                *code = bits;
            }
        });
    (0..CENSUS_BITS)
        .map(|k| {
            codes
                .iter()
                .map(|c| if c >> k & 1 == 1 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Luminance, plus 24 census bit-planes for [`CostKind::Census`].
pub fn extract_features(img: &PlanarImage, kind: CostKind) -> Result<PlanarImage> {
    let lum = img.luminance()?;
    match kind {
        CostKind::Sad | CostKind::Ncc => Ok(lum),
        CostKind::Census => {
            let mut planes = Vec::with_capacity(1 + CENSUS_BITS);
            let bits = census_planes(&lum);
            planes.push(lum.into_data());
            planes.extend(bits);
            PlanarImage::from_planes(img.width(), img.height(), planes)
        }
    }
}

/// Pads to the coarsest denominator, downsamples the luminance through the
/// configured scales (block means) and extracts features at each one.
pub fn build_pyramid(img: &PlanarImage, cfg: &ValidConfig) -> Result<FeaturePyramid> {
    let lum = img.luminance()?;
    let (padded, pad) = pad_to_multiple(&lum, cfg.coarsest_den() as usize)?;

    // fine to coarse
    let mut chain: Vec<(u32, PlanarImage)> = Vec::with_capacity(cfg.scale_dens.len());
    let finest = cfg.finest_den();
    chain.push((finest, downsample_block(&padded, finest as usize)?));
    for &den in cfg.scale_dens.iter().rev().skip(1) {
        let (prev_den, prev) = chain.last().expect("chain starts non-empty");
        let next = downsample_block(prev, (den / prev_den) as usize)?;
        chain.push((den, next));
    }
    chain.reverse();

    let kind = cfg.cost;
    let levels = chain
        .into_par_iter()
        .map(|(scale_den, lum)| {
            extract_features(&lum, kind).map(|features| PyramidLevel {
                scale_den,
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeaturePyramid { levels, kind, pad })
}
