//! Brute-force minimizer for small instances.
//!
//! Every view is either skipped or taken at one of its rates, so the search
//! visits `Π(|rates_v| + 1)` selections including the empty one. With
//! `constrained` set, only selections spanning the window (a camera at or
//! left of `U_L` and one at or right of `U_R`) are scored, which is the
//! search space of the dynamic program. Without it, any non-empty selection
//! is scored and viewpoints beyond the outermost cameras are rendered
//! one-sided.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{
    presets, Catalog, CatalogFile, NavigationWindow, Representation, VideoProfile, ViewRates,
    ViewpointGrid,
};
use crate::dp::solve_optimal;
use crate::distortion::{Anchor, Coverage, DownloadPlan, Evaluator};
use crate::select::{candidate_order, check_budget, cheapest_covering_cost, SolveError};

pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Why a selection was not scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Scored,
    Empty,
    OverBudget,
    /// Fails the window-spanning constraint.
    Filtered,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Scored => "scored",
            Verdict::Empty => "empty",
            Verdict::OverBudget => "over_budget",
            Verdict::Filtered => "filtered",
        }
    }
}

/// One enumerated selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry<'a> {
    pub ordinal: u64,
    pub items: &'a [Representation],
    pub total_rate: u64,
    pub verdict: Verdict,
    /// NaN unless scored.
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    pub plan: DownloadPlan,
    pub enumerated: u64,
    pub scored: u64,
}

/// Enumeration size for a catalog.
pub fn enumeration_size(catalog: &Catalog) -> u64 {
    catalog
        .views
        .iter()
        .try_fold(1u64, |acc, v| acc.checked_mul(v.rates.len() as u64 + 1))
        .unwrap_or(u64::MAX)
}

pub fn solve_exhaustive(
    catalog: &Catalog,
    profile: &VideoProfile,
    window: &NavigationWindow,
    budget_kbps: f64,
    constrained: bool,
) -> Result<OracleOutcome, SolveError> {
    solve_exhaustive_with(catalog, profile, window, budget_kbps, constrained, |_| {})
}

/// As [`solve_exhaustive`], handing every enumerated selection to `visit`.
pub fn solve_exhaustive_with(
    catalog: &Catalog,
    profile: &VideoProfile,
    window: &NavigationWindow,
    budget_kbps: f64,
    constrained: bool,
    mut visit: impl FnMut(&Entry),
) -> Result<OracleOutcome, SolveError> {
    let budget = check_budget(budget_kbps)?;
    let expected = enumeration_size(catalog);
    if expected > MAX_ENUMERATION {
        return Err(SolveError::TooLarge(format!(
            "{expected} selections exceed the limit of {MAX_ENUMERATION}"
        )));
    }
    let eval = Evaluator::new(catalog.grid, profile, catalog.coding_mode)?;
    let coverage = if constrained {
        Coverage::Strict
    } else {
        Coverage::OneSided
    };

    // choice[i] == 0 skips view i, otherwise picks rates[choice[i] - 1]
    let n = catalog.views.len();
    let mut choice = vec![0usize; n];
    let mut items: Vec<Representation> = Vec::with_capacity(n);
    let mut anchors: Vec<Anchor> = Vec::with_capacity(n);
    let mut best: Option<(f64, Vec<Representation>, u64)> = None;
    let (mut enumerated, mut scored) = (0u64, 0u64);
    let mut any_spanning = false;
    loop {
        items.clear();
        anchors.clear();
        for (v, &c) in catalog.views.iter().zip(&choice) {
            if c > 0 {
                let rate = v.rates[c - 1];
                items.push(Representation { view: v.camera, rate });
                anchors.push(eval.anchor(v.camera, rate));
            }
        }
        let total: u64 = items.iter().map(|r| catalog.cost(r.rate) as u64).sum();
        let spans = match (anchors.first(), anchors.last()) {
            (Some(f), Some(l)) => f.index <= window.left && l.index >= window.right,
            _ => false,
        };
        any_spanning |= spans;
        let verdict = if items.is_empty() {
            Verdict::Empty
        } else if constrained && !spans {
            Verdict::Filtered
        } else if total as f64 > budget + 1e-9 {
            Verdict::OverBudget
        } else {
            Verdict::Scored
        };
        let mut value = f64::NAN;
        if verdict == Verdict::Scored {
            value = eval.window_mean(&anchors, window, coverage)?;
            scored += 1;
            let better = best.as_ref().is_none_or(|(bv, bi, bc)| {
                candidate_order(value, &items, total, *bv, bi, *bc) == Ordering::Less
            });
            if better {
                best = Some((value, items.clone(), total));
            }
        }
        visit(&Entry {
            ordinal: enumerated,
            items: &items,
            total_rate: total,
            verdict,
            distortion: value,
        });
        enumerated += 1;

        let mut i = 0;
        while i < n {
            choice[i] += 1;
            if choice[i] <= catalog.views[i].rates.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    assert_eq!(enumerated, expected, "enumeration count mismatch");

    match best {
        Some((value, items, _)) => {
            let mut plan = DownloadPlan::from_items(items, catalog.depth_rate_overhead)?;
            plan.distortion = value;
            Ok(OracleOutcome {
                plan,
                enumerated,
                scored,
            })
        }
        None if constrained && !any_spanning => Err(SolveError::Uncoverable),
        None => {
            let cheapest = if constrained {
                cheapest_covering_cost(catalog, window)
            } else {
                catalog.min_rate().map(|r| catalog.cost(r))
            };
            Err(SolveError::Infeasible {
                cheapest_kbps: cheapest.unwrap_or(0),
            })
        }
    }
}

/// A small randomized instance for cross-checking solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub seed: u64,
    pub catalog: Catalog,
    pub profile: VideoProfile,
    pub window: NavigationWindow,
    pub budget_kbps: f64,
}

const CORPUS_RATES: [u32; 8] = [100, 200, 300, 500, 1000, 2000, 3000, 4000];
const CORPUS_DELTAS: [f64; 4] = [0.5, 0.25, 0.2, 0.1];

/// At most four cameras with at most three rates each, a window no wider
/// than two viewpoint units, and a budget anywhere from starvation to
/// plenty. Cameras are occasionally missing, so some windows are
/// uncoverable.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cameras = rng.random_range(2..=4u32);
    let delta = CORPUS_DELTAS[rng.random_range(0..CORPUS_DELTAS.len())];
    let grid = ViewpointGrid::new(cameras, delta).expect("corpus grid");

    let mut views = Vec::new();
    for camera in 1..=cameras {
        if rng.random_bool(0.85) {
            let k = rng.random_range(1..=3usize);
            let mut rates: Vec<u32> = CORPUS_RATES.to_vec();
            rates.shuffle(&mut rng);
            rates.truncate(k);
            rates.sort_unstable();
            views.push(ViewRates { camera, rates });
        }
    }
    if views.is_empty() {
        views.push(ViewRates {
            camera: rng.random_range(1..=cameras),
            rates: vec![CORPUS_RATES[rng.random_range(0..CORPUS_RATES.len())]],
        });
    }
    let overhead = if rng.random_bool(0.25) { 50 } else { 0 };
    let catalog = Catalog {
        name: format!("corpus-{seed}"),
        description: None,
        approximate: false,
        grid,
        views,
        depth_rate_overhead: overhead,
        coding_mode: Default::default(),
    };

    let max = grid.max_index();
    let width_cap = (2.0 / delta).round() as u32;
    let left = rng.random_range(0..=max);
    let right = left + rng.random_range(0..=width_cap.min(max - left));
    let window = NavigationWindow {
        left,
        right,
    };

    let file: CatalogFile = presets::L1.parse().expect("L1 preset");
    let names: Vec<&String> = file.profiles.keys().collect();
    let profile = file.profiles[names[rng.random_range(0..names.len())]].clone();

    let ceiling: u64 = catalog
        .views
        .iter()
        .map(|v| catalog.cost(*v.rates.last().unwrap()) as u64)
        .sum();
    let budget_kbps = if rng.random_bool(0.5) {
        rng.random_range(0..=ceiling + 500) as f64
    } else {
        rng.random_range(0.0..(ceiling as f64) * 1.2)
    };
    Instance {
        seed,
        catalog,
        profile,
        window,
        budget_kbps,
    }
}

/// Seed of the `i`-th corpus instance.
pub fn corpus_seed(base: u64, i: usize) -> u64 {
    let mut z = base.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusReport {
    pub instances: usize,
    /// Instances where both sides produced a plan.
    pub compared: usize,
    /// Largest `dp - oracle` distortion difference.
    pub max_gap: f64,
    /// Smallest `dp - oracle`; negative means the oracle lost.
    pub min_gap: f64,
    pub worst_seed: Option<u64>,
    /// Seeds where the check failed, with a reason.
    pub failures: Vec<(u64, String)>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs the dynamic program against the oracle on `count` random instances.
/// In constrained mode both must agree on every verdict and on the
/// distortion within 1e-9. Unconstrained, the oracle searches a superset, so
/// only `dp >= oracle` is required.
pub fn check_corpus(count: usize, seed: u64, constrained: bool) -> CorpusReport {
    const TOL: f64 = 1e-9;
    let mut report = CorpusReport {
        instances: count,
        max_gap: f64::NEG_INFINITY,
        min_gap: f64::INFINITY,
        ..Default::default()
    };
    for i in 0..count {
        let s = corpus_seed(seed, i);
        let inst = random_instance(s);
        let dp = solve_optimal(&inst.catalog, &inst.profile, &inst.window, inst.budget_kbps);
        let or = solve_exhaustive(
            &inst.catalog,
            &inst.profile,
            &inst.window,
            inst.budget_kbps,
            constrained,
        );
        match (dp, or) {
            (Ok(d), Ok(o)) => {
                report.compared += 1;
                let gap = d.distortion - o.plan.distortion;
                if gap > report.max_gap {
                    report.max_gap = gap;
                    report.worst_seed = Some(s);
                }
                report.min_gap = report.min_gap.min(gap);
                if constrained && gap.abs() > TOL {
                    report.failures.push((s, format!("distortion gap {gap:e}")));
                } else if !constrained && gap < -TOL {
                    report.failures.push((s, format!("oracle worse by {:e}", -gap)));
                }
            }
            (Err(a), Err(b)) if !constrained || a == b => {}
            // a plan that cannot span the window is still scored unconstrained
            (Err(_), Ok(_)) if !constrained => {}
            (a, b) => report.failures.push((
                s,
                format!("dp {:?} vs oracle {:?}", a.map(|p| p.distortion), b.map(|o| o.plan.distortion)),
            )),
        }
    }
    if report.compared == 0 {
        report.max_gap = 0.0;
        report.min_gap = 0.0;
    }
    report
}
