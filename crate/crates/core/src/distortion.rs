//! Coding, synthesis and navigation distortion.
//!
//! All values are VQM scores in `[0, 1]`, lower is better. A camera view coded
//! at rate `r` has distortion `1 - (a - b / (r + e))`. A virtual viewpoint `u`
//! between two anchors is rendered at
//!
//! ```text
//! α·D_min + (1 - α)·β·D_max + (1 - α - (1 - α)·β)·D_I
//! ```
//!
//! where `D_min` belongs to the better anchor, `α = exp(-ξ|u - v_min|)` and
//! `β = exp(-ξ|u - v_max|)`. The distortion of a window is the mean over its
//! grid viewpoints, each viewpoint counted once; a viewpoint that coincides
//! with a downloaded camera is decoded directly.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::catalog::{
    CodingMode, NavigationWindow, RdParams, Representation, VideoProfile, ViewpointGrid,
};

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of coding-distortion evaluations that fell outside `[0, 1]` and
/// were clamped. Non-zero values point at a misfitted profile.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistortionError {
    #[error("window uncovered at viewpoint {0}")]
    WindowUncovered(f64),
    #[error("viewpoint {u} lies outside the anchor pair [{left}, {right}]")]
    OutsidePair { u: f64, left: u32, right: u32 },
    #[error("plan lists view {0} at two different rates")]
    ConflictingRates(u32),
    #[error("empty plan")]
    EmptyPlan,
    #[error("profile `{0}` has no joint-coding fit")]
    MissingJointFit(String),
}

impl RdParams {
    /// Coding distortion at `rate_kbps`, clamped to `[0, 1]`.
    pub fn distortion(&self, rate_kbps: f64) -> f64 {
        let d = 1.0 - (self.a - self.b / (rate_kbps + self.e));
        if (0.0..=1.0).contains(&d) {
            d
        } else {
            CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
            log::warn!("coding distortion {d} at {rate_kbps} kbps clamped");
            d.clamp(0.0, 1.0)
        }
    }
}

fn rd_for(profile: &VideoProfile, mode: CodingMode) -> Result<&RdParams, DistortionError> {
    profile
        .rd(mode)
        .ok_or_else(|| DistortionError::MissingJointFit(profile.name.clone()))
}

/// Synthesis combination with precomputed weights.
#[inline]
fn blend(alpha: f64, beta: f64, d_min: f64, d_max: f64, inpaint: f64) -> f64 {
    alpha * d_min + (1.0 - alpha) * beta * d_max + (1.0 - alpha - (1.0 - alpha) * beta) * inpaint
}

pub fn coding_distortion(
    rate_kbps: f64,
    profile: &VideoProfile,
    mode: CodingMode,
) -> Result<f64, DistortionError> {
    Ok(rd_for(profile, mode)?.distortion(rate_kbps))
}

/// Distortion of viewpoint `u` rendered from the pair `(left, right)`.
pub fn synthesis_distortion(
    u: f64,
    left: Representation,
    right: Representation,
    profile: &VideoProfile,
    mode: CodingMode,
) -> Result<f64, DistortionError> {
    let (lv, rv) = (left.view as f64, right.view as f64);
    let (lo, hi) = if lv <= rv { (lv, rv) } else { (rv, lv) };
    if !(lo - 1e-9..=hi + 1e-9).contains(&u) {
        return Err(DistortionError::OutsidePair {
            u,
            left: left.view,
            right: right.view,
        });
    }
    let rd = rd_for(profile, mode)?;
    let dl = rd.distortion(left.rate as f64);
    let dr = rd.distortion(right.rate as f64);
    // decoded directly; the better copy wins if both anchors share a camera
    match ((u - lv).abs() < 1e-9, (u - rv).abs() < 1e-9) {
        (true, true) => return Ok(dl.min(dr)),
        (true, false) => return Ok(dl),
        (false, true) => return Ok(dr),
        _ => {}
    }
    let ((v_min, d_min), (v_max, d_max)) = if dl <= dr {
        ((lv, dl), (rv, dr))
    } else {
        ((rv, dr), (lv, dl))
    };
    let alpha = (-profile.xi * (u - v_min).abs()).exp();
    let beta = (-profile.xi * (u - v_max).abs()).exp();
    Ok(blend(alpha, beta, d_min, d_max, profile.inpaint_distortion))
}

/// Viewpoint rendered from a single anchor (`D_max = 0`, both weights
/// measured from the anchor).
pub fn one_sided_distortion(
    u: f64,
    anchor: Representation,
    profile: &VideoProfile,
    mode: CodingMode,
) -> Result<f64, DistortionError> {
    let d = rd_for(profile, mode)?.distortion(anchor.rate as f64);
    let w = (-profile.xi * (u - anchor.view as f64).abs()).exp();
    Ok(blend(w, w, d, 0.0, profile.inpaint_distortion))
}

/// A set of downloaded representations with at most one rate per view.
#[derive(Debug, Clone, PartialEq)]
pub struct DownloadPlan {
    /// Sorted by strictly increasing view.
    pub items: Vec<Representation>,
    /// Texture rates plus the per-view depth overhead, in kbps.
    pub total_rate: u32,
    /// Predicted navigation distortion of the window the plan was chosen for.
    pub distortion: f64,
}

impl DownloadPlan {
    /// Normalizes `items` into plan order. Exact duplicates collapse; the
    /// same view at two rates is rejected.
    pub fn from_items(
        mut items: Vec<Representation>,
        depth_overhead: u32,
    ) -> Result<Self, DistortionError> {
        if items.is_empty() {
            return Err(DistortionError::EmptyPlan);
        }
        items.sort();
        items.dedup();
        if let Some(w) = items.windows(2).find(|w| w[0].view == w[1].view) {
            return Err(DistortionError::ConflictingRates(w[0].view));
        }
        let total_rate = items.iter().map(|r| r.rate + depth_overhead).sum();
        Ok(Self {
            items,
            total_rate,
            distortion: f64::NAN,
        })
    }

    pub fn views(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().map(|r| r.view)
    }

    pub fn rates(&self) -> impl Iterator<Item = u32> + '_ {
        self.items.iter().map(|r| r.rate)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn mean_rate(&self) -> f64 {
        self.rates().map(f64::from).sum::<f64>() / self.items.len() as f64
    }
}

/// Strict coverage: mean distortion over the `N_u` window
/// viewpoints.
pub fn navigation_distortion(
    plan: &DownloadPlan,
    window: &NavigationWindow,
    profile: &VideoProfile,
    grid: &ViewpointGrid,
    mode: CodingMode,
) -> Result<f64, DistortionError> {
    let eval = Evaluator::new(*grid, profile, mode)?;
    let anchors: Vec<Anchor> = plan
        .items
        .iter()
        .map(|r| eval.anchor(r.view, r.rate))
        .collect();
    eval.window_mean(&anchors, window, Coverage::Strict)
}

/// A downloaded camera as seen by the evaluator: grid index plus its coding
/// distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub index: u32,
    pub distortion: f64,
}

/// How viewpoints outside the span of the downloaded cameras are charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// Uncovered viewpoints are an error.
    Strict,
    /// Uncovered viewpoints are rendered from the nearest anchor alone.
    OneSided,
}

/// Grid-index evaluator used by the solvers. Holds a precomputed table of
/// `exp(-ξ·k·Δ)` so repeated synthesis evaluations avoid `exp` calls.
#[derive(Debug, Clone)]
pub struct Evaluator {
    grid: ViewpointGrid,
    rd: RdParams,
    inpaint: f64,
    decay: Vec<f64>,
}

impl Evaluator {
    pub fn new(
        grid: ViewpointGrid,
        profile: &VideoProfile,
        mode: CodingMode,
    ) -> Result<Self, DistortionError> {
        Ok(Self::with_params(grid, *rd_for(profile, mode)?, profile.xi, profile.inpaint_distortion))
    }

    pub fn with_params(grid: ViewpointGrid, rd: RdParams, xi: f64, inpaint: f64) -> Self {
        let decay = (0..=grid.max_index())
            .map(|k| (-xi * grid.distance(0, k)).exp())
            .collect();
        Self {
            grid,
            rd,
            inpaint,
            decay,
        }
    }

    pub fn grid(&self) -> &ViewpointGrid {
        &self.grid
    }

    pub fn rd(&self) -> &RdParams {
        &self.rd
    }

    pub fn coding(&self, rate: u32) -> f64 {
        self.rd.distortion(rate as f64)
    }

    pub fn anchor(&self, camera: u32, rate: u32) -> Anchor {
        Anchor {
            index: self.grid.camera_index(camera),
            distortion: self.coding(rate),
        }
    }

    fn weight(&self, a: u32, b: u32) -> f64 {
        self.decay[a.abs_diff(b) as usize]
    }

    /// Viewpoint `u` strictly or weakly between `left` and `right`.
    pub fn pair(&self, u: u32, left: Anchor, right: Anchor) -> f64 {
        if u == left.index {
            return left.distortion;
        }
        if u == right.index {
            return right.distortion;
        }
        let (min, max) = if left.distortion <= right.distortion {
            (left, right)
        } else {
            (right, left)
        };
        blend(
            self.weight(u, min.index),
            self.weight(u, max.index),
            min.distortion,
            max.distortion,
            self.inpaint,
        )
    }

    pub fn one_sided(&self, u: u32, anchor: Anchor) -> f64 {
        if u == anchor.index {
            return anchor.distortion;
        }
        let w = self.weight(u, anchor.index);
        blend(w, w, anchor.distortion, 0.0, self.inpaint)
    }

    /// Sum of per-viewpoint distortion over the window. `anchors` must be
    /// sorted by strictly increasing index.
    pub fn window_sum(
        &self,
        anchors: &[Anchor],
        window: &NavigationWindow,
        coverage: Coverage,
    ) -> Result<f64, DistortionError> {
        debug_assert!(anchors.windows(2).all(|w| w[0].index < w[1].index));
        let (first, last) = match (anchors.first(), anchors.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(DistortionError::EmptyPlan),
        };
        if coverage == Coverage::Strict && (first.index > window.left || last.index < window.right)
        {
            let u = if first.index > window.left {
                window.left
            } else {
                window.right
            };
            return Err(DistortionError::WindowUncovered(self.grid.viewpoint(u)));
        }
        // `next` is the first anchor with index >= u
        let mut next = 0;
        let mut sum = 0.0;
        for u in window.indices() {
            while next < anchors.len() && anchors[next].index < u {
                next += 1;
            }
            let d = if next == anchors.len() {
                self.one_sided(u, last)
            } else if anchors[next].index == u {
                anchors[next].distortion
            } else if next == 0 {
                self.one_sided(u, first)
            } else {
                self.pair(u, anchors[next - 1], anchors[next])
            };
            sum += d;
        }
        Ok(sum)
    }

    pub fn window_mean(
        &self,
        anchors: &[Anchor],
        window: &NavigationWindow,
        coverage: Coverage,
    ) -> Result<f64, DistortionError> {
        Ok(self.window_sum(anchors, window, coverage)? / window.len() as f64)
    }
}
