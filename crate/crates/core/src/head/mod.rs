//! The prediction head: symmetric cost volume, aggregation and soft-argmin
//! regression at a single scale.
//!
//! The same head predicts the full disparity at the coarsest scale and the
//! residual disparity at every finer scale, where the right features have
//! already been warped by the current estimate. The symmetric candidate set
//! is what lets a residual be negative.

mod aggregate;
mod regress;
mod volume;

pub use aggregate::aggregate;
pub use regress::{regress_disparity, soft_argmin};
pub use volume::{build_cost_volume, candidate_of_index, index_of_candidate, SymmetricCostVolume};

use crate::config::{AggregatorParams, CostKind};
use crate::error::Result;
use crate::image::{DisparityMap, PlanarImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchHead {
    pub cost: CostKind,
    pub d_cv: usize,
    pub aggregator: AggregatorParams,
    /// Multiplies the aggregated costs before regression (inverse softmax
    /// temperature). At 1 the head is the plain composition.
    pub softmax_scale: f32,
}

impl MatchHead {
    pub fn new(cost: CostKind, d_cv: usize, aggregator: AggregatorParams) -> Self {
        Self {
            cost,
            d_cv,
            aggregator,
            softmax_scale: 1.0,
        }
    }

    pub fn with_softmax_scale(mut self, scale: f32) -> Self {
        self.softmax_scale = scale;
        self
    }

    pub fn cost_volume(
        &self,
        left: &PlanarImage,
        right: &PlanarImage,
        scale_den: u32,
    ) -> Result<SymmetricCostVolume> {
        build_cost_volume(left, right, self.d_cv, self.cost, scale_den)
    }

    /// build -> aggregate -> scale -> regress.
    pub fn predict(
        &self,
        left: &PlanarImage,
        right: &PlanarImage,
        scale_den: u32,
    ) -> Result<DisparityMap> {
        let cv = self.cost_volume(left, right, scale_den)?;
        let mut agg = aggregate(&cv, &self.aggregator);
        if self.softmax_scale != 1.0 {
            let s = self.softmax_scale;
            agg.costs_mut().iter_mut().for_each(|c| *c *= s);
        }
        Ok(regress_disparity(&agg))
    }
}
