//! Pyramid, cascade and refinement wired together for one stereo pair.

use std::time::{Duration, Instant};

use crate::coarse_to_fine::{run_cascade_from, CascadeTrace};
use crate::config::{RefinementKind, ValidConfig};
use crate::error::{Error, Result};
use crate::image::{DisparityMap, PlanarImage};
use crate::pyramid::{build_pyramid, pad_to_multiple};
use crate::refine::refine_full;

#[derive(Debug, Clone)]
pub struct MatchOutput {
    /// Full input resolution, cropped back to the original size.
    pub disparity: DisparityMap,
    /// Left-view estimate at the finest configured scale (padded grid).
    pub finest: DisparityMap,
    /// Right-view estimate at the finest scale, computed only for photometric refinement.
    pub right_finest: Option<DisparityMap>,
    pub trace: CascadeTrace,
    pub pyramid_time: Duration,
    pub refine_time: Duration,
    pub total_time: Duration,
}

/// Options beyond the configuration, mostly for experiments and tests.
#[derive(Debug, Clone, Default)]
pub struct MatchOptions {
    /// Starting estimate at the coarsest scale, in coarsest-scale pixels.
    pub initial: Option<DisparityMap>,
}

pub fn match_pair(left: &PlanarImage, right: &PlanarImage, cfg: &ValidConfig) -> Result<MatchOutput> {
    match_pair_with(left, right, cfg, &MatchOptions::default())
}

pub fn match_pair_with(
    left: &PlanarImage,
    right: &PlanarImage,
    cfg: &ValidConfig,
    opts: &MatchOptions,
) -> Result<MatchOutput> {
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
    let started = Instant::now();
    let multiple = cfg.coarsest_den() as usize;
    let (left_p, pad) = pad_to_multiple(&left.luminance()?, multiple)?;
    let (right_p, _) = pad_to_multiple(&right.luminance()?, multiple)?;

    let t = Instant::now();
    let (pl, pr) = rayon::join(|| build_pyramid(&left_p, cfg), || build_pyramid(&right_p, cfg));
    let (pl, pr) = (pl?, pr?);
    let mut pyramid_time = t.elapsed();

    let (finest, trace) = run_cascade_from(&pl, &pr, cfg, opts.initial.as_ref())?;

    // right view: mirror both images and swap them, then mirror the result back
    let right_finest = if cfg.refinement == RefinementKind::Photometric {
        let t = Instant::now();
        let (ml, mr) = (right_p.mirror_horizontal(), left_p.mirror_horizontal());
        let (pml, pmr) = rayon::join(|| build_pyramid(&ml, cfg), || build_pyramid(&mr, cfg));
        let (pml, pmr) = (pml?, pmr?);
        pyramid_time += t.elapsed();
        let initial = opts.initial.as_ref().map(DisparityMap::mirror_horizontal);
        let (d, _) = run_cascade_from(&pml, &pmr, cfg, initial.as_ref())?;
        Some(d.mirror_horizontal())
    } else {
        None
    };

    let t = Instant::now();
    let disparity = refine_full(&finest, right_finest.as_ref(), &left_p, &right_p, &pad, cfg)?;
    let refine_time = t.elapsed();

    Ok(MatchOutput {
        disparity,
        finest,
        right_finest,
        trace,
        pyramid_time,
        refine_time,
        total_time: started.elapsed(),
    })
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
