use rayon::prelude::*;

use crate::head::volume::{candidate_of_index, SymmetricCostVolume};
use crate::image::DisparityMap;

/// Expected candidate under `softmax(-costs)`, evaluated in f64.
pub fn soft_argmin(costs: &[f32]) -> f64 {
    let d_cv = costs.len();
    let min = costs.iter().copied().fold(f32::INFINITY, f32::min);
    let mut norm = 0.0f64;
    let mut acc = 0.0f64;
    for (k, c) in costs.iter().enumerate() {
        let p = (-(f64::from(*c) - f64::from(min))).exp();
        norm += p;
        acc += p * f64::from(candidate_of_index(k, d_cv));
    }
    acc / norm
}

/// Sub-pixel disparity per pixel by soft-argmin over the stored candidates.
pub fn regress_disparity(cv: &SymmetricCostVolume) -> DisparityMap {
    let d = cv.d_cv();
    let values: Vec<f32> = cv
        .costs()
        .par_chunks(d)
        .map(|costs| soft_argmin(costs) as f32)
        .collect();
    DisparityMap::dense(cv.width(), cv.height(), cv.scale_den(), values)
        .expect("softmax of finite costs is finite")
}
