//! Shared plumbing for the selection algorithms: errors, algorithm ids,
//! deterministic tie-breaking and the per-segment dispatch used by sessions.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::baselines;
use crate::catalog::{Catalog, NavigationWindow, Representation, VideoProfile};
use crate::distortion::{DistortionError, DownloadPlan};
use crate::{dp, greedy};

/// Distortions closer than this are treated as equal and fall through to the
/// structural tie-breakers.
pub const TIE_EPSILON: f64 = 1e-12;

/// Distortion charged for a segment that no plan fits.
pub const SENTINEL_DISTORTION: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no covering plan fits the budget (cheapest covering plan costs {cheapest_kbps} kbps)")]
    Infeasible { cheapest_kbps: u32 },
    #[error("the stored cameras cannot cover the window")]
    Uncoverable,
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("invalid budget {0}")]
    InvalidBudget(f64),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Optimal,
    Greedy,
    ViewAdaptation,
    RateAdaptation,
    TwoViews,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Optimal,
        Algorithm::Greedy,
        Algorithm::ViewAdaptation,
        Algorithm::RateAdaptation,
        Algorithm::TwoViews,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Optimal => "optimal",
            Algorithm::Greedy => "greedy",
            Algorithm::ViewAdaptation => "view",
            Algorithm::RateAdaptation => "rate",
            Algorithm::TwoViews => "2views",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "optimal" | "dp" => Ok(Algorithm::Optimal),
            "greedy" => Ok(Algorithm::Greedy),
            "view" => Ok(Algorithm::ViewAdaptation),
            "rate" => Ok(Algorithm::RateAdaptation),
            "2views" => Ok(Algorithm::TwoViews),
            other => Err(format!(
                "unknown algorithm `{other}` (expected optimal|greedy|view|rate|2views)"
            )),
        }
    }
}

/// Outcome of one segment decision. `plan == None` is the distortion-1
/// sentinel for segments where nothing fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub plan: Option<DownloadPlan>,
    pub distortion: f64,
}

impl Decision {
    pub fn from_plan(plan: DownloadPlan) -> Self {
        Self {
            distortion: plan.distortion,
            plan: Some(plan),
        }
    }

    pub fn sentinel() -> Self {
        Self {
            plan: None,
            distortion: SENTINEL_DISTORTION,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.plan.is_none()
    }
}

/// Runs `algo` once, surfacing every error.
pub fn solve(
    algo: Algorithm,
    catalog: &Catalog,
    profile: &VideoProfile,
    window: &NavigationWindow,
    budget_kbps: f64,
    predicted_view: Option<u32>,
) -> Result<DownloadPlan, SolveError> {
    match algo {
        Algorithm::Optimal => dp::solve_optimal(catalog, profile, window, budget_kbps),
        Algorithm::Greedy => {
            greedy::solve_greedy(catalog, profile, window, budget_kbps).map(|o| o.plan)
        }
        Algorithm::TwoViews => {
            baselines::two_views_rate_adaptation(catalog, profile, window, budget_kbps)
        }
        Algorithm::RateAdaptation => {
            let center = predicted_view.unwrap_or((window.left + window.right) / 2);
            baselines::rate_adaptation(catalog, profile, center, window, budget_kbps)
        }
        Algorithm::ViewAdaptation => {
            let joint = baselines::JointSegmentCatalog::from_catalog(catalog, profile)?;
            baselines::view_adaptation(&joint, window, budget_kbps)
        }
    }
}

/// Runs `algo` for one segment. Infeasible budgets become the sentinel;
/// other errors propagate.
pub fn decide(
    algo: Algorithm,
    catalog: &Catalog,
    profile: &VideoProfile,
    window: &NavigationWindow,
    budget_kbps: f64,
    predicted_view: Option<u32>,
) -> Result<Decision, SolveError> {
    match solve(algo, catalog, profile, window, budget_kbps, predicted_view) {
        Ok(plan) => Ok(Decision::from_plan(plan)),
        Err(SolveError::Infeasible { .. }) | Err(SolveError::InvalidBudget(_)) => {
            Ok(Decision::sentinel())
        }
        Err(e) => Err(e),
    }
}

/// Ranks two candidate plans of equal distortion (within `TIE_EPSILON`):
/// fewer views, then lexicographically smaller view list, then lower cost,
/// then lexicographically smaller rates.
pub fn structural_order(a: &[Representation], a_cost: u64, b: &[Representation], b_cost: u64) -> Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.iter().map(|r| r.view).cmp(b.iter().map(|r| r.view)))
        .then_with(|| a_cost.cmp(&b_cost))
        .then_with(|| a.iter().map(|r| r.rate).cmp(b.iter().map(|r| r.rate)))
}

/// Full candidate order: distortion first, then [`structural_order`].
pub fn candidate_order(
    a_value: f64,
    a: &[Representation],
    a_cost: u64,
    b_value: f64,
    b: &[Representation],
    b_cost: u64,
) -> Ordering {
    if (a_value - b_value).abs() > TIE_EPSILON {
        return a_value.total_cmp(&b_value);
    }
    structural_order(a, a_cost, b, b_cost)
}

/// Budget validation shared by all solvers.
pub(crate) fn check_budget(budget_kbps: f64) -> Result<f64, SolveError> {
    if budget_kbps.is_nan() || budget_kbps < 0.0 {
        return Err(SolveError::InvalidBudget(budget_kbps));
    }
    Ok(budget_kbps)
}

/// Cheapest plan that covers the window with one view at or left of `U_L`
/// and one at or right of `U_R` (possibly the same camera).
pub fn cheapest_covering_cost(catalog: &Catalog, window: &NavigationWindow) -> Option<u32> {
    let grid = &catalog.grid;
    let min_cost = |rates: &[u32]| catalog.cost(rates[0]);
    let left = catalog
        .views
        .iter()
        .filter(|v| grid.camera_index(v.camera) <= window.left)
        .map(|v| (grid.camera_index(v.camera), min_cost(&v.rates)));
    let right_min = catalog
        .views
        .iter()
        .filter(|v| grid.camera_index(v.camera) >= window.right)
        .map(|v| min_cost(&v.rates))
        .min();
    left.filter_map(|(idx, cost)| {
        if idx >= window.right {
            Some(cost)
        } else {
            right_min.map(|r| cost + r)
        }
    })
    .min()
}
