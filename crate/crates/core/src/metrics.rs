//! Disparity error metrics and the smooth-L1 / weighted multi-prediction losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::DisparityMap;

/// Default weights for three finest-scale predictions and the refined output.
pub const DEFAULT_LOSS_WEIGHTS: [f64; 4] = [0.2, 0.4, 0.6, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothL1 {
    /// `x - 0.5` for `x >= 1`, `0.5 * x` below.
    #[default]
    Literal,
    /// `x - 0.5` for `x >= 1`, `0.5 * x^2` below.
    Quadratic,
}

pub fn smooth_l1(x: f64, variant: SmoothL1) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeInput(x));
    }
    Ok(if x >= 1.0 {
        x - 0.5
    } else {
        match variant {
            SmoothL1::Literal => x * 0.5,
            SmoothL1::Quadratic => 0.5 * x * x,
        }
    })
}

pub fn weighted_loss(losses: &[f64], weights: &[f64]) -> Result<f64> {
    if losses.len() != weights.len() {
        return Err(Error::LengthMismatch(losses.len(), weights.len()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative loss weight {w}")));
    }
    Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub epe: f64,
    /// Fraction of labelled pixels off by more than 1 px.
    pub er1: f64,
    pub er3: f64,
    /// Off by more than 3 px and more than 5% of the true value.
    pub d1: f64,
    pub n_valid: usize,
    pub n_total: usize,
    pub smooth_l1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weighted_loss: Option<f64>,
}

/// Metrics over pixels labelled in `gt`; the prediction is used as is.
pub fn evaluate(pred: &DisparityMap, gt: &DisparityMap) -> Result<EvalReport> {
    evaluate_with(pred, gt, SmoothL1::Literal)
}

pub fn evaluate_with(pred: &DisparityMap, gt: &DisparityMap, variant: SmoothL1) -> Result<EvalReport> {
    if !pred.same_size(gt) {
        return Err(Error::ShapeMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let (mut n, mut sum, mut sl1) = (0usize, 0.0f64, 0.0f64);
    let (mut over1, mut over3, mut d1) = (0usize, 0usize, 0usize);
    for ((p, g), ok) in pred.values().iter().zip(gt.values()).zip(gt.valid()) {
        if !*ok {
            continue;
        }
        let (p, g) = (f64::from(*p), f64::from(*g));
        let err = if p.is_finite() { (p - g).abs() } else { f64::INFINITY };
        n += 1;
        sum += err;
        sl1 += smooth_l1(err, variant)?;
        if err > 1.0 {
            over1 += 1;
        }
        if err > 3.0 {
            over3 += 1;
            if err > 0.05 * g.abs() {
                d1 += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let nf = n as f64;
    Ok(EvalReport {
        epe: sum / nf,
        er1: over1 as f64 / nf,
        er3: over3 as f64 / nf,
        d1: d1 as f64 / nf,
        n_valid: n,
        n_total: gt.values().len(),
        smooth_l1: sl1 / nf,
        weighted_loss: None,
    })
}

/// Ground truth at `1/factor` resolution: each output pixel takes the valid
/// sample nearest its block centre, divided by `factor`.
pub fn downsample_ground_truth(gt: &DisparityMap, factor: usize) -> Result<DisparityMap> {
    if factor == 0 || gt.width() % factor != 0 || gt.height() % factor != 0 {
        return Err(Error::NotDivisible {
            width: gt.width(),
            height: gt.height(),
            factor,
        });
    }
    let (ow, oh) = (gt.width() / factor, gt.height() / factor);
    // block offsets ordered by distance to the block centre, ties in raster order
    let c = (factor as f64 - 1.0) / 2.0;
    let mut order: Vec<(usize, usize)> = (0..factor)
        .flat_map(|dy| (0..factor).map(move |dx| (dx, dy)))
        .collect();
    order.sort_by(|a, b| {
        let da = (a.0 as f64 - c).powi(2) + (a.1 as f64 - c).powi(2);
        let db = (b.0 as f64 - c).powi(2) + (b.1 as f64 - c).powi(2);
        da.total_cmp(&db)
    });
    let mut values = vec![0.0f32; ow * oh];
    let mut valid = vec![false; ow * oh];
    for oy in 0..oh {
        for ox in 0..ow {
            let hit = order
                .iter()
                .map(|(dx, dy)| (ox * factor + dx, oy * factor + dy))
                .find(|(x, y)| gt.is_valid(*x, *y));
            if let Some((x, y)) = hit {
                values[oy * ow + ox] = gt.get(x, y) / factor as f32;
                valid[oy * ow + ox] = true;
            }
        }
    }
    DisparityMap::new(ow, oh, gt.scale_den() * factor as u32, values, valid)
}

/// Mean smooth-L1 of each prediction against ground truth brought to its
/// scale, combined with `weights`.
pub fn multi_prediction_loss(
    preds: &[DisparityMap],
    gt: &DisparityMap,
    weights: &[f64],
    variant: SmoothL1,
) -> Result<f64> {
    if preds.len() != weights.len() {
        return Err(Error::LengthMismatch(preds.len(), weights.len()));
    }
    let losses = preds
        .iter()
        .map(|p| {
            let factor = p.scale_den() / gt.scale_den().max(1);
            let gt_at = if factor > 1 {
                downsample_ground_truth(gt, factor as usize)?
            } else {
                gt.clone()
            };
            Ok(evaluate_with(p, &gt_at, variant)?.smooth_l1)
        })
        .collect::<Result<Vec<_>>>()?;
    weighted_loss(&losses, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smooth_l1_branches() {
        assert_eq!(smooth_l1(2.0, SmoothL1::Literal).unwrap(), 1.5);
        assert_eq!(smooth_l1(0.5, SmoothL1::Literal).unwrap(), 0.25);
        assert_eq!(smooth_l1(0.5, SmoothL1::Quadratic).unwrap(), 0.125);
        assert_eq!(smooth_l1(1.0, SmoothL1::Literal).unwrap(), 0.5);
        assert_eq!(smooth_l1(1.0, SmoothL1::Quadratic).unwrap(), 0.5);
        assert!(matches!(smooth_l1(-0.1, SmoothL1::Literal), Err(Error::NegativeInput(_))));
    }

    #[test]
    fn weighted_loss_examples() {
        assert!((weighted_loss(&[1.0; 4], &DEFAULT_LOSS_WEIGHTS).unwrap() - 2.2).abs() < 1e-12);
        assert_eq!(weighted_loss(&[3.0, 7.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(weighted_loss(&[2.0, 3.0], &[0.5, 1.0]).unwrap(), 4.0);
        assert!(matches!(weighted_loss(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
    }

    fn constant(v: f32) -> DisparityMap {
        DisparityMap::constant(5, 4, 1, v)
    }

    #[test]
    fn evaluate_examples() {
        let r = evaluate(&constant(10.0), &constant(10.0)).unwrap();
        assert_eq!((r.epe, r.er1, r.d1), (0.0, 0.0, 0.0));

        let r = evaluate(&constant(12.0), &constant(10.0)).unwrap();
        assert_eq!((r.epe, r.er1, r.er3, r.d1), (2.0, 1.0, 0.0, 0.0));

        let r = evaluate(&constant(14.0), &constant(10.0)).unwrap();
        assert_eq!((r.er3, r.d1), (1.0, 1.0));
    }

    #[test]
    fn evaluate_counts_only_labelled_pixels() {
        let gt = DisparityMap::new(4, 1, 1, vec![1.0, 0.0, 3.0, 0.0], vec![true, false, true, false]).unwrap();
        let pred = DisparityMap::dense(4, 1, 1, vec![2.0, 100.0, 3.0, 100.0]).unwrap();
        let r = evaluate(&pred, &gt).unwrap();
        assert_eq!(r.n_valid, 2);
        assert_eq!(r.epe, 0.5);
        let empty = DisparityMap::new(1, 1, 1, vec![0.0], vec![false]).unwrap();
        assert!(matches!(evaluate(&empty, &empty), Err(Error::EmptyGroundTruth)));
    }

    #[test]
    fn ground_truth_downsampling_uses_nearest_valid() {
        let gt = DisparityMap::new(
            2,
            2,
            1,
            vec![8.0, 0.0, 0.0, 0.0],
            vec![true, false, false, false],
        )
        .unwrap();
        let g = downsample_ground_truth(&gt, 2).unwrap();
        assert_eq!((g.values()[0], g.valid()[0], g.scale_den()), (4.0, true, 2));
    }

    #[test]
    fn multi_prediction_loss_of_perfect_predictions_is_zero() {
        let gt = DisparityMap::constant(6, 6, 1, 6.0);
        let preds = vec![DisparityMap::constant(2, 2, 3, 2.0), gt.clone()];
        assert_eq!(multi_prediction_loss(&preds, &gt, &[0.5, 1.0], SmoothL1::Literal).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn smooth_l1_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for v in [SmoothL1::Literal, SmoothL1::Quadratic] {
                prop_assert!(smooth_l1(lo, v).unwrap() <= smooth_l1(hi, v).unwrap());
            }
        }

        #[test]
        fn shift_covariant_and_d1_below_er3(
            gt in prop::collection::vec(0.0f32..100.0, 16),
            noise in prop::collection::vec(-8.0f32..8.0, 16),
            shift in -4i32..4,
        ) {
            let pred: Vec<f32> = gt.iter().zip(&noise).map(|(g, n)| g + n).collect();
            let a = evaluate(&DisparityMap::dense(4, 4, 1, pred.clone()).unwrap(), &DisparityMap::dense(4, 4, 1, gt.clone()).unwrap()).unwrap();
            prop_assert!(a.d1 <= a.er3);
            // integer shifts keep the f32 differences exact; D1 depends on |gt| so compare the rest
            let s = shift as f32;
            let b = evaluate(
                &DisparityMap::dense(4, 4, 1, pred.iter().map(|v| v + s).collect()).unwrap(),
                &DisparityMap::dense(4, 4, 1, gt.iter().map(|v| v + s).collect()).unwrap(),
            ).unwrap();
            prop_assert!((a.epe - b.epe).abs() < 1e-4);
            prop_assert_eq!(a.er1, b.er1);
            prop_assert_eq!(a.er3, b.er3);
        }
    }
}
