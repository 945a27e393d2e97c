//! Turbo-style false colour for disparity maps.

use crate::image::{DisparityMap, PlanarImage};

const RED: [f64; 6] = [0.13572138, 4.61539260, -42.66032258, 132.13108234, -152.94239396, 59.28637943];
const GREEN: [f64; 6] = [0.09140261, 2.19418839, 4.84296658, -14.18503333, 4.27729857, 2.82956604];
const BLUE: [f64; 6] = [0.10667330, 12.64194608, -60.58204836, 110.36276771, -89.90310912, 27.34824973];

fn horner(coeffs: &[f64; 6], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Polynomial fit of the Turbo colormap at `t` in `[0, 1]` (clamped).
pub fn turbo(t: f64) -> [f32; 3] {
    let t = t.clamp(0.0, 1.0);
    [RED, GREEN, BLUE].map(|c| horner(&c, t).clamp(0.0, 1.0) as f32)
}

/// RGB rendering over `[0, d_max_display]`; out-of-range values clamp, invalid
/// pixels are black.
pub fn render_colormap(d: &DisparityMap, d_max_display: f32) -> PlanarImage {
    assert!(d_max_display > 0.0, "display range must be positive");
    let n = d.values().len();
    let mut planes = vec![vec![0.0f32; n]; 3];
    for (i, (v, ok)) in d.values().iter().zip(d.valid()).enumerate() {
        if !*ok {
            continue;
        }
        let rgb = turbo(f64::from(*v / d_max_display));
        for c in 0..3 {
            planes[c][i] = rgb[c];
        }
    }
    PlanarImage::from_planes(d.width(), d.height(), planes).expect("colormap output is finite")
}
