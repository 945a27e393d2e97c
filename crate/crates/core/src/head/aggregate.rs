//! Cost aggregation: identity, iterated box filtering, and 4-path SGM.

use rayon::prelude::*;

use crate::config::{AggregatorKind, AggregatorParams};
use crate::head::volume::SymmetricCostVolume;

pub fn aggregate(cv: &SymmetricCostVolume, params: &AggregatorParams) -> SymmetricCostVolume {
    match params.kind {
        AggregatorKind::None => cv.clone(),
        AggregatorKind::Box => {
            let mut out = cv.clone();
            for _ in 0..params.filter_iterations {
                out = box_filter(&out, params.box_radius);
            }
            out
        }
        AggregatorKind::Sgm => sgm(cv, params.sgm_p1, params.sgm_p2),
    }
}

/// Separable per-candidate mean over a `(2r+1)^2` window shrunk at the borders.
fn box_filter(cv: &SymmetricCostVolume, radius: usize) -> SymmetricCostVolume {
    if radius == 0 {
        return cv.clone();
    }
    let (w, h, d) = (cv.width(), cv.height(), cv.d_cv());
    let src = cv.costs();
    let row_len = w * d;

    let mut horiz = vec![0.0f32; src.len()];
    horiz
        .par_chunks_mut(row_len)
        .zip(src.par_chunks(row_len))
        .for_each(|(out, row)| {
            for x in 0..w {
                let (lo, hi) = (x.saturating_sub(radius), (x + radius).min(w - 1));
                let norm = 1.0 / (hi - lo + 1) as f32;
                for k in 0..d {
                    let mut acc = 0.0f32;
                    for xs in lo..=hi {
                        acc += row[xs * d + k];
                    }
                    out[x * d + k] = acc * norm;
                }
            }
        });

    let mut out = vec![0.0f32; src.len()];
    out.par_chunks_mut(row_len).enumerate().for_each(|(y, out)| {
        let (lo, hi) = (y.saturating_sub(radius), (y + radius).min(h - 1));
        let norm = 1.0 / (hi - lo + 1) as f32;
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0f32;
            for ys in lo..=hi {
                acc += horiz[ys * row_len + i];
            }
            *o = acc * norm;
        }
    });
    let mut result = cv.clone();
    result.costs_mut().copy_from_slice(&out);
    result
}

/// One SGM step: `cost + min(prev[d], prev[d±1] + p1, min(prev) + p2) - min(prev)`.
#[inline]
fn sgm_step(cost: &[f32], prev: &[f32], out: &mut [f32], p1: f32, p2: f32) {
    let d = cost.len();
    let prev_min = prev.iter().copied().fold(f32::INFINITY, f32::min);
    let jump = prev_min + p2;
    for k in 0..d {
        let mut best = prev[k].min(jump);
        if k > 0 {
            best = best.min(prev[k - 1] + p1);
        }
        if k + 1 < d {
            best = best.min(prev[k + 1] + p1);
        }
        out[k] = cost[k] + (best - prev_min);
    }
}

/// Path costs along +x, -x, +y and -y, summed in a fixed order and divided by 4.
fn sgm(cv: &SymmetricCostVolume, p1: f32, p2: f32) -> SymmetricCostVolume {
    let (w, h, d) = (cv.width(), cv.height(), cv.d_cv());
    let src = cv.costs();
    let row_len = w * d;
    if src.is_empty() {
        return cv.clone();
    }

    let horizontal = |forward: bool| -> Vec<f32> {
        let mut acc = vec![0.0f32; src.len()];
        acc.par_chunks_mut(row_len)
            .zip(src.par_chunks(row_len))
            .for_each(|(out, row)| {
                let order: Box<dyn Iterator<Item = usize>> = if forward {
                    Box::new(0..w)
                } else {
                    Box::new((0..w).rev())
                };
                let mut prev: Option<usize> = None;
                for x in order {
                    let cell = x * d;
                    match prev {
                        None => out[cell..cell + d].copy_from_slice(&row[cell..cell + d]),
                        Some(p) => {
                            let (a, b) = if p < x {
                                let (lo, hi) = out.split_at_mut(cell);
                                (&lo[p * d..p * d + d], &mut hi[..d])
                            } else {
                                let (lo, hi) = out.split_at_mut(p * d);
                                (&hi[..d], &mut lo[cell..cell + d])
                            };
                            sgm_step(&row[cell..cell + d], a, b, p1, p2);
                        }
                    }
                    prev = Some(x);
                }
            });
        acc
    };

    let vertical = |forward: bool| -> Vec<f32> {
        let mut acc = vec![0.0f32; src.len()];
        let rows: Vec<usize> = if forward {
            (0..h).collect()
        } else {
            (0..h).rev().collect()
        };
        let first = rows[0];
        acc[first * row_len..(first + 1) * row_len]
            .copy_from_slice(&src[first * row_len..(first + 1) * row_len]);
        for pair in rows.windows(2) {
            let (p, y) = (pair[0], pair[1]);
            let (prev, cur) = if p < y {
                let (lo, hi) = acc.split_at_mut(y * row_len);
                (&lo[p * row_len..(p + 1) * row_len], &mut hi[..row_len])
            } else {
                let (lo, hi) = acc.split_at_mut(p * row_len);
                (&hi[..row_len], &mut lo[y * row_len..(y + 1) * row_len])
            };
            let cost = &src[y * row_len..(y + 1) * row_len];
            cur.par_chunks_mut(d)
                .zip(prev.par_chunks(d))
                .zip(cost.par_chunks(d))
                .with_min_len(64)
                .for_each(|((out, prev), cost)| sgm_step(cost, prev, out, p1, p2));
        }
        acc
    };

    let ((lr, rl), (tb, bt)) = rayon::join(
        || rayon::join(|| horizontal(true), || horizontal(false)),
        || rayon::join(|| vertical(true), || vertical(false)),
    );
    let costs: Vec<f32> = lr
        .par_iter()
        .zip(&rl)
        .zip(&tb)
        .zip(&bt)
        .map(|(((a, b), c), e)| ((a + b) + (c + e)) * 0.25)
        .collect();
    let mut out = cv.clone();
    out.costs_mut().copy_from_slice(&costs);
    out
}
