//! Seeded random-dot stereo pairs with exact ground truth.
//!
//! Every surface carries a continuous multi-octave value-noise texture in
//! world coordinates, so the right view is rendered by evaluating that texture
//! at `x' + d` rather than by resampling pixels. Foreground surfaces are
//! rendered brighter than the background so depth edges are also luminance
//! edges.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{DisparityMap, PlanarImage};
use crate::io::{kitti, pfm, write_gray16_png};

const OCTAVES: [usize; 7] = [1, 2, 4, 8, 16, 32, 64];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scene {
    /// One fronto-parallel plane.
    Constant { disparity: f32 },
    /// A centred rectangle at `foreground` in front of a plane at `background`.
    TwoPlane { background: f32, foreground: f32 },
    /// Disparity varying linearly from the top row to the bottom row.
    Ramp { top: f32, bottom: f32 },
    /// Left half at `base`, right half at `base + jump`; the left half loses a
    /// `jump`-wide band next to the step to occlusion.
    StepOcclusion { base: f32, jump: f32 },
}

impl Scene {
    fn max_disparity(&self) -> f32 {
        match *self {
            Scene::Constant { disparity } => disparity,
            Scene::TwoPlane { background, foreground } => background.max(foreground),
            Scene::Ramp { top, bottom } => top.max(bottom),
            Scene::StepOcclusion { base, jump } => base + jump,
        }
    }

    fn min_disparity(&self) -> f32 {
        match *self {
            Scene::Constant { disparity } => disparity,
            Scene::TwoPlane { background, foreground } => background.min(foreground),
            Scene::Ramp { top, bottom } => top.min(bottom),
            Scene::StepOcclusion { base, .. } => base,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StereoSample {
    pub left: PlanarImage,
    pub right: PlanarImage,
    /// Left-view truth; invalid where the point is hidden in or outside the right view.
    pub gt_left: DisparityMap,
    /// Right-view truth (positive: right `x'` matches left `x' + d`).
    pub gt_right: DisparityMap,
}

/// Continuous value-noise texture over the plane, values in `[0, 1]`.
struct Texture {
    octaves: Vec<(usize, usize, Vec<f32>)>,
}

impl Texture {
    fn new(rng: &mut ChaCha8Rng, width: usize, height: usize) -> Self {
        let octaves = OCTAVES
            .iter()
            .map(|&cell| {
                let cols = width / cell + 2;
                let rows = height / cell + 2;
                let lattice = (0..cols * rows).map(|_| rng.random::<f32>()).collect();
                (cell, cols, lattice)
            })
            .collect();
        Self { octaves }
    }

    fn sample(&self, x: f64, y: f64) -> f32 {
        let mut acc = 0.0f64;
        for (cell, cols, lattice) in &self.octaves {
            let (gx, gy) = (x / *cell as f64, y / *cell as f64);
            let (x0, y0) = (gx.floor(), gy.floor());
            let (fx, fy) = (gx - x0, gy - y0);
            let (i, j) = (x0 as usize, y0 as usize);
            let at = |ii: usize, jj: usize| f64::from(lattice[jj * cols + ii]);
            let top = at(i, j) * (1.0 - fx) + at(i + 1, j) * fx;
            let bot = at(i, j + 1) * (1.0 - fx) + at(i + 1, j + 1) * fx;
            acc += top * (1.0 - fy) + bot * fy;
        }
        (acc / self.octaves.len() as f64) as f32
    }
}

struct Surface {
    texture: Texture,
    offset: f32,
    gain: f32,
}

impl Surface {
    fn shade(&self, x: f64, y: f64) -> f32 {
        self.offset + self.gain * self.texture.sample(x, y)
    }
}

pub fn generate(scene: Scene, width: usize, height: usize, seed: u64) -> Result<StereoSample> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument("empty image size".into()));
    }
    let (lo, hi) = (scene.min_disparity(), scene.max_disparity());
    if !lo.is_finite() || !hi.is_finite() || lo < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "disparities must be finite and non-negative ({lo}..{hi})"
        )));
    }
    if hi >= width as f32 {
        return Err(Error::DisparityTooLarge {
            disparity: hi,
            width,
        });
    }
    if let Scene::TwoPlane { background, foreground } = scene {
        if foreground <= background {
            return Err(Error::InvalidArgument(
                "foreground disparity must exceed background disparity".into(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let canvas_w = width + hi.ceil() as usize + 2;
    let back = Surface {
        texture: Texture::new(&mut rng, canvas_w, height),
        offset: 0.0,
        gain: 0.65,
    };
    let front = Surface {
        texture: Texture::new(&mut rng, canvas_w, height),
        offset: 0.35,
        gain: 0.65,
    };

    let (w, h) = (width, height);
    let ramp = |y: usize, top: f32, bottom: f32| {
        let t = if h > 1 { y as f32 / (h - 1) as f32 } else { 0.0 };
        top + (bottom - top) * t
    };
    // front surface disparity and its left-view footprint: x range, y range
    let front_layer: Option<(f32, (f64, f64), (usize, usize))> = match scene {
        Scene::TwoPlane { foreground, .. } => Some((
            foreground,
            ((w / 3) as f64, (2 * w / 3) as f64),
            (h / 4, 3 * h / 4),
        )),
        Scene::StepOcclusion { base, jump } => Some((base + jump, ((w / 2) as f64, f64::INFINITY), (0, h))),
        _ => None,
    };
    let back_disparity = |y: usize| match scene {
        Scene::Constant { disparity } => disparity,
        Scene::Ramp { top, bottom } => ramp(y, top, bottom),
        Scene::TwoPlane { background, .. } => background,
        Scene::StepOcclusion { base, .. } => base,
    };
    // does the front surface cover left-view position (x, y)?
    let front_at = |x: f64, y: usize| -> Option<f32> {
        front_layer.and_then(|(d, (x0, x1), (y0, y1))| {
            ((y0..y1).contains(&y) && x >= x0 && x < x1).then_some(d)
        })
    };
    // (disparity, is_front) seen by a left pixel
    let left_surface = |x: usize, y: usize| -> (f32, bool) {
        match front_at(x as f64, y) {
            Some(d) => (d, true),
            None => (back_disparity(y), false),
        }
    };
    // (disparity, is_front) seen by a right pixel; the front occludes
    let right_surface = |x: usize, y: usize| -> (f32, bool) {
        if let Some((d, _, _)) = front_layer {
            if front_at(x as f64 + f64::from(d), y).is_some() {
                return (d, true);
            }
        }
        (back_disparity(y), false)
    };
    let shade = |front_surface: bool, x: f64, y: usize| -> f32 {
        let s = if front_surface { &front } else { &back };
        s.shade(x, y as f64)
    };

    let n = w * h;
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    let (mut gl, mut gl_ok) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut gr, mut gr_ok) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for y in 0..h {
        for x in 0..w {
            let (d, f) = left_surface(x, y);
            left.push(shade(f, x as f64, y));
            gl.push(d);
            // visible in the right view iff the right pixel it lands on sees it
            let xr = x as f32 - d;
            let visible = xr >= 0.0 && {
                // a back point hides behind the front iff the front covers x - d + d_front
                f || front_layer
                    .is_none_or(|(df, _, _)| front_at(f64::from(xr) + f64::from(df), y).is_none())
            };
            gl_ok.push(visible);

            let (dr, fr) = right_surface(x, y);
            right.push(shade(fr, x as f64 + f64::from(dr), y));
            gr.push(dr);
            // seen in the left view iff the left position it maps to shows the same surface
            let xl = f64::from(x as f32 + dr);
            gr_ok.push(xl <= (w - 1) as f64 && (front_at(xl, y).is_some() == fr));
        }
    }
    Ok(StereoSample {
        left: PlanarImage::new(w, h, 1, left)?,
        right: PlanarImage::new(w, h, 1, right)?,
        gt_left: DisparityMap::new(w, h, 1, gl, gl_ok)?,
        gt_right: DisparityMap::new(w, h, 1, gr, gr_ok)?,
    })
}

/// File names written by [`write_sample`].
pub const LEFT_FILE: &str = "left.png";
pub const RIGHT_FILE: &str = "right.png";
pub const GT_DENSE_FILE: &str = "gt.pfm";
pub const GT_NOC_FILE: &str = "gt_noc.png";

/// Writes both views as 16-bit PNGs, the dense left truth as PFM and the
/// non-occluded left truth as a KITTI PNG.
pub fn write_sample(sample: &StereoSample, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_gray16_png(&sample.left, dir.join(LEFT_FILE))?;
    write_gray16_png(&sample.right, dir.join(RIGHT_FILE))?;
    let gt = &sample.gt_left;
    let dense = PlanarImage::new(gt.width(), gt.height(), 1, gt.values().to_vec())?;
    pfm::write_pfm(&dense, dir.join(GT_DENSE_FILE))?;
    kitti::write_kitti_disparity(gt, dir.join(GT_NOC_FILE))?;
    Ok(())
}
