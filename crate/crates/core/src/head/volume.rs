use rayon::prelude::*;

use crate::config::CostKind;
use crate::error::{Error, Result};
use crate::image::PlanarImage;
use crate::pyramid::{clamp_index, CENSUS_BITS};

const NCC_RADIUS: isize = 2;

/// Signed disparity held by slot `k` of a symmetric volume with `d_cv` slots.
///
/// Slots cover `[-d_cv/2 + 1, d_cv/2]`; zero sits at index `d_cv/2 - 1`.
#[inline]
pub fn candidate_of_index(k: usize, d_cv: usize) -> i32 {
    k as i32 - (d_cv / 2) as i32 + 1
}

/// Inverse of [`candidate_of_index`].
#[inline]
pub fn index_of_candidate(d: i32, d_cv: usize) -> Option<usize> {
    let k = d + (d_cv / 2) as i32 - 1;
    (0..d_cv as i32).contains(&k).then_some(k as usize)
}

/// Per-pixel matching costs over `d_cv` signed candidates at one scale.
///
/// Costs are stored pixel-major: the `d_cv` costs of pixel `(x, y)` are
/// contiguous at `(y * width + x) * d_cv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCostVolume {
    width: usize,
    height: usize,
    d_cv: usize,
    scale_den: u32,
    costs: Vec<f32>,
}

impl SymmetricCostVolume {
    pub fn new(
        width: usize,
        height: usize,
        d_cv: usize,
        scale_den: u32,
        costs: Vec<f32>,
    ) -> Result<Self> {
        if d_cv < 2 || d_cv % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "d_cv must be even and >= 2 (got {d_cv})"
            )));
        }
        if costs.len() != width * height * d_cv {
            return Err(Error::BufferLength {
                width,
                height,
                channels: d_cv,
                actual: costs.len(),
            });
        }
        if costs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            width,
            height,
            d_cv,
            scale_den,
            costs,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn d_cv(&self) -> usize {
        self.d_cv
    }

    #[inline]
    pub fn scale_den(&self) -> u32 {
        self.scale_den
    }

    pub fn cell_count(&self) -> usize {
        self.costs.len()
    }

    pub fn costs(&self) -> &[f32] {
        &self.costs
    }

    pub(crate) fn costs_mut(&mut self) -> &mut [f32] {
        &mut self.costs
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.d_cv;
        &self.costs[i..i + self.d_cv]
    }

    pub fn candidates(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.d_cv).map(|k| candidate_of_index(k, self.d_cv))
    }

    /// Same volume with the roles of the slots mirrored around zero. Slot
    /// `d_cv - 1` (candidate `d_cv/2`) has no mirror and is dropped; the
    /// freed slot 0 is filled with `fill`.
    pub fn mirrored(&self, fill: f32) -> SymmetricCostVolume {
        let d = self.d_cv;
        let mut costs = vec![fill; self.costs.len()];
        for (dst, src) in costs.chunks_mut(d).zip(self.costs.chunks(d)) {
            for (k, v) in src.iter().enumerate() {
                let mirrored = -candidate_of_index(k, d);
                if let Some(j) = index_of_candidate(mirrored, d) {
                    dst[j] = *v;
                }
            }
        }
        SymmetricCostVolume {
            costs,
            ..self.clone()
        }
    }
}

/// Pixel-interleaved copy of channels `first..first + count`.
fn interleave(img: &PlanarImage, first: usize, count: usize) -> Vec<f32> {
    let n = img.plane_len();
    let mut out = vec![0.0f32; n * count];
    for c in 0..count {
        let plane = img.plane(first + c);
        for (i, v) in plane.iter().enumerate() {
            out[i * count + c] = *v;
        }
    }
    out
}

/// Builds the symmetric cost volume between left features and (possibly
/// warped) right features. Cost of candidate `d` at `x` compares the left
/// sample at `x` with the right sample at `x - d`, clamped to the row.
/// All costs lie in `[0, 1]`.
pub fn build_cost_volume(
    left: &PlanarImage,
    right: &PlanarImage,
    d_cv: usize,
    kind: CostKind,
    scale_den: u32,
) -> Result<SymmetricCostVolume> {
    if !left.same_shape(right) {
        return Err(Error::ShapeMismatch(format!(
            "left {}x{}x{} vs right {}x{}x{}",
            left.width(),
            left.height(),
            left.channels(),
            right.width(),
            right.height(),
            right.channels()
        )));
    }
    if d_cv < 2 || d_cv % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "d_cv must be even and >= 2 (got {d_cv})"
        )));
    }
    let (w, h) = (left.width(), left.height());
    let mut costs = vec![0.0f32; w * h * d_cv];
    if w == 0 || h == 0 {
        return SymmetricCostVolume::new(w, h, d_cv, scale_den, costs);
    }
    let row_len = w * d_cv;

    match kind {
        CostKind::Census => {
            let expected = 1 + CENSUS_BITS;
            if left.channels() != expected {
                return Err(Error::ShapeMismatch(format!(
                    "census features need {expected} channels, got {}",
                    left.channels()
                )));
            }
            let lb = interleave(left, 1, CENSUS_BITS);
            let rb = interleave(right, 1, CENSUS_BITS);
            let norm = 1.0 / CENSUS_BITS as f32;
            costs
                .par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(y, row)| {
                    for x in 0..w {
                        let l = &lb[(y * w + x) * CENSUS_BITS..][..CENSUS_BITS];
                        for k in 0..d_cv {
                            let xr = clamp_index(x as isize - candidate_of_index(k, d_cv) as isize, w);
                            let r = &rb[(y * w + xr) * CENSUS_BITS..][..CENSUS_BITS];
                            let dist: f32 = l.iter().zip(r).map(|(a, b)| (a - b).abs()).sum();
                            row[x * d_cv + k] = (dist * norm).min(1.0);
                        }
                    }
                });
        }
        CostKind::Sad => {
            let (lp, rp) = (left.plane(0), right.plane(0));
            costs
                .par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(y, row)| {
                    let (lrow, rrow) = (&lp[y * w..][..w], &rp[y * w..][..w]);
                    for x in 0..w {
                        for k in 0..d_cv {
                            let xr = clamp_index(x as isize - candidate_of_index(k, d_cv) as isize, w);
                            row[x * d_cv + k] = (lrow[x] - rrow[xr]).abs().min(1.0);
                        }
                    }
                });
        }
        CostKind::Ncc => {
            let (lp, rp) = (left.plane(0), right.plane(0));
            costs
                .par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(y, row)| {
                    for x in 0..w {
                        for k in 0..d_cv {
                            let d = candidate_of_index(k, d_cv) as isize;
                            row[x * d_cv + k] = ncc_cost(lp, rp, w, h, x, y, d);
                        }
                    }
                });
        }
    }
    SymmetricCostVolume::new(w, h, d_cv, scale_den, costs)
}

/// `(1 - ncc) / 2` over a clamped 5x5 window; flat windows give the neutral 0.5.
fn ncc_cost(lp: &[f32], rp: &[f32], w: usize, h: usize, x: usize, y: usize, d: isize) -> f32 {
    let (mut sl, mut sr, mut sll, mut srr, mut slr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for dy in -NCC_RADIUS..=NCC_RADIUS {
        let sy = clamp_index(y as isize + dy, h);
        for dx in -NCC_RADIUS..=NCC_RADIUS {
            let lx = clamp_index(x as isize + dx, w);
            let rx = clamp_index(x as isize + dx - d, w);
            let l = f64::from(lp[sy * w + lx]);
            let r = f64::from(rp[sy * w + rx]);
            sl += l;
            sr += r;
            sll += l * l;
            srr += r * r;
            slr += l * r;
        }
    }
    let n = ((2 * NCC_RADIUS + 1) * (2 * NCC_RADIUS + 1)) as f64;
    let var_l = sll / n - (sl / n).powi(2);
    let var_r = srr / n - (sr / n).powi(2);
    let cov = slr / n - (sl / n) * (sr / n);
    let denom = (var_l * var_r).sqrt();
    if denom < 1e-12 {
        return 0.5;
    }
    let ncc = (cov / denom).clamp(-1.0, 1.0);
    ((1.0 - ncc) * 0.5) as f32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pyramid::extract_features;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> PlanarImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PlanarImage::new(w, h, 1, (0..w * h).map(|_| rng.random::<f32>()).collect()).unwrap()
    }

    /// Right view where `right(x) = left(x + shift)`, so left `x` matches right `x - shift`.
    fn shifted(left: &PlanarImage, shift: usize) -> PlanarImage {
        let w = left.width();
        PlanarImage::from_fn(w, left.height(), |x, y| left.get(0, (x + shift).min(w - 1), y))
    }

    #[test]
    fn layout_places_zero_at_half_minus_one() {
        for d_cv in (2..=64).step_by(2) {
            let cands: Vec<i32> = (0..d_cv).map(|k| candidate_of_index(k, d_cv)).collect();
            assert_eq!(cands[0], -(d_cv as i32) / 2 + 1);
            assert_eq!(*cands.last().unwrap(), d_cv as i32 / 2);
            assert_eq!(cands[d_cv / 2 - 1], 0);
            let pos = cands.iter().filter(|c| **c > 0).count();
            let neg = cands.iter().filter(|c| **c < 0).count();
            assert_eq!(pos, neg + 1);
            for (k, c) in cands.iter().enumerate() {
                assert_eq!(index_of_candidate(*c, d_cv), Some(k));
            }
        }
    }

    #[test]
    fn self_match_has_zero_cost_at_zero() {
        let img = random_image(12, 10, 3);
        for kind in [CostKind::Census, CostKind::Sad, CostKind::Ncc] {
            let f = extract_features(&img, kind).unwrap();
            let cv = build_cost_volume(&f, &f, 6, kind, 1).unwrap();
            let zero = index_of_candidate(0, 6).unwrap();
            for y in 2..8 {
                for x in 2..10 {
                    assert!(cv.pixel(x, y)[zero].abs() < 1e-6, "{kind:?} at ({x},{y})");
                }
            }
            assert!(cv.costs().iter().all(|c| (0.0..=1.0).contains(c)));
        }
    }

    #[test]
    fn pure_translation_argmin_is_shift() {
        let left = random_image(24, 12, 9);
        let right = shifted(&left, 1);
        for kind in [CostKind::Census, CostKind::Sad, CostKind::Ncc] {
            let (fl, fr) = (extract_features(&left, kind).unwrap(), extract_features(&right, kind).unwrap());
            let cv = build_cost_volume(&fl, &fr, 4, kind, 1).unwrap();
            for y in 3..9 {
                for x in 4..20 {
                    let costs = cv.pixel(x, y);
                    let best = (0..4).min_by(|a, b| costs[*a].total_cmp(&costs[*b])).unwrap();
                    assert_eq!(candidate_of_index(best, 4), 1, "{kind:?} at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn sad_volume_matches_brute_force() {
        let (l, r) = (random_image(8, 8, 1), random_image(8, 8, 2));
        let cv = build_cost_volume(&l, &r, 4, CostKind::Sad, 1).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                for (k, d) in [-1i32, 0, 1, 2].into_iter().enumerate() {
                    let xr = (x as i32 - d).clamp(0, 7) as usize;
                    let expected = (l.get(0, x, y) - r.get(0, xr, y)).abs();
                    assert_eq!(cv.pixel(x, y)[k], expected);
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = PlanarImage::zeros(4, 4, 1);
        let b = PlanarImage::zeros(5, 4, 1);
        assert!(matches!(
            build_cost_volume(&a, &b, 4, CostKind::Sad, 1),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
