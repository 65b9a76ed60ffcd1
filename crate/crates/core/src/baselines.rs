//! Reference adaptation logics used for comparison.
//!
//! * view adaptation: cameras are jointly coded in fixed two-camera segments
//!   and only whole segments can be requested, all at one common rate;
//! * rate adaptation: the camera pair around the user's current viewpoint,
//!   plus one prefetched neighbour when the window spills past the pair;
//! * two-view rate adaptation: the lateral cameras of the window with
//!   exhaustively optimized rates.

use std::cmp::Ordering;

use crate::catalog::{Catalog, CodingMode, NavigationWindow, RdParams, Representation, VideoProfile, ViewpointGrid};
use crate::distortion::{Anchor, Coverage, DistortionError, DownloadPlan, Evaluator};
use crate::select::{candidate_order, check_budget, SolveError};

/// Above this many segments the subset search is refused.
const MAX_SEGMENTS: usize = 20;

/// Stored cameras regrouped into jointly coded segments.
#[derive(Debug, Clone)]
pub struct JointSegmentCatalog {
    pub grid: ViewpointGrid,
    /// Consecutive stored cameras, two per segment; an odd set leaves a
    /// trailing single camera.
    pub segments: Vec<Vec<u32>>,
    /// Per-view rates shared by every camera of a segment.
    pub segment_rates: Vec<Vec<u32>>,
    pub depth_rate_overhead: u32,
    pub joint: RdParams,
    pub independent: RdParams,
    pub xi: f64,
    pub inpaint_distortion: f64,
}

impl JointSegmentCatalog {
    pub fn from_catalog(catalog: &Catalog, profile: &VideoProfile) -> Result<Self, SolveError> {
        let joint = *profile
            .rd(CodingMode::JointPaired)
            .ok_or_else(|| DistortionError::MissingJointFit(profile.name.clone()))?;
        let mut segments = Vec::new();
        let mut segment_rates = Vec::new();
        for chunk in catalog.views.chunks(2) {
            segments.push(chunk.iter().map(|v| v.camera).collect());
            let mut rates = chunk[0].rates.clone();
            for v in &chunk[1..] {
                rates.retain(|r| v.rates.contains(r));
            }
            segment_rates.push(rates);
        }
        Ok(Self {
            grid: catalog.grid,
            segments,
            segment_rates,
            depth_rate_overhead: catalog.depth_rate_overhead,
            joint,
            independent: profile.independent,
            xi: profile.xi,
            inpaint_distortion: profile.inpaint_distortion,
        })
    }

    /// Total rate of one segment at per-view rate `rate`.
    pub fn segment_total(&self, segment: usize, rate: u32) -> u32 {
        self.segments[segment].len() as u32 * (rate + self.depth_rate_overhead)
    }

    fn coding(&self, segment: usize, rate: u32) -> f64 {
        if self.segments[segment].len() > 1 {
            self.joint.distortion(rate as f64)
        } else {
            self.independent.distortion(rate as f64)
        }
    }
}

/// Best covering set of whole segments at one common per-view rate.
pub fn view_adaptation(
    joint: &JointSegmentCatalog,
    window: &NavigationWindow,
    budget_kbps: f64,
) -> Result<DownloadPlan, SolveError> {
    let budget = check_budget(budget_kbps)?;
    let n = joint.segments.len();
    if n > MAX_SEGMENTS {
        return Err(SolveError::TooLarge(format!("{n} segments")));
    }
    let eval = Evaluator::with_params(joint.grid, joint.joint, joint.xi, joint.inpaint_distortion);
    let grid = &joint.grid;
    let mut best: Option<(f64, Vec<Representation>, u64)> = None;
    let mut cheapest: Option<u64> = None;
    let mut covered_any = false;
    for mask in 1u32..(1u32 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let cams = chosen.iter().flat_map(|&s| joint.segments[s].iter().copied());
        let (lo, hi) = cams.fold((u32::MAX, 0), |(lo, hi), c| {
            let i = grid.camera_index(c);
            (lo.min(i), hi.max(i))
        });
        if lo > window.left || hi < window.right {
            continue;
        }
        covered_any = true;
        let mut common = joint.segment_rates[chosen[0]].clone();
        for &s in &chosen[1..] {
            common.retain(|r| joint.segment_rates[s].contains(r));
        }
        for &rate in &common {
            let cost: u64 = chosen.iter().map(|&s| joint.segment_total(s, rate) as u64).sum();
            cheapest = Some(cheapest.map_or(cost, |c| c.min(cost)));
            if cost as f64 > budget + 1e-9 {
                continue;
            }
            let mut anchors: Vec<(Anchor, Representation)> = chosen
                .iter()
                .flat_map(|&s| {
                    let d = joint.coding(s, rate);
                    joint.segments[s].iter().map(move |&view| {
                        (
                            Anchor {
                                index: grid.camera_index(view),
                                distortion: d,
                            },
                            Representation { view, rate },
                        )
                    })
                })
                .collect();
            anchors.sort_by_key(|a| a.0.index);
            let a: Vec<Anchor> = anchors.iter().map(|x| x.0).collect();
            let value = eval.window_mean(&a, window, Coverage::Strict)?;
            let items: Vec<Representation> = anchors.into_iter().map(|x| x.1).collect();
            let better = best.as_ref().is_none_or(|(bv, bi, bc)| {
                candidate_order(value, &items, cost, *bv, bi, *bc) == Ordering::Less
            });
            if better {
                best = Some((value, items, cost));
            }
        }
    }
    match best {
        Some((value, items, _)) => {
            let mut plan = DownloadPlan::from_items(items, joint.depth_rate_overhead)?;
            plan.distortion = value;
            Ok(plan)
        }
        None if !covered_any => Err(SolveError::Uncoverable),
        None => Err(SolveError::Infeasible {
            cheapest_kbps: cheapest.unwrap_or(0) as u32,
        }),
    }
}

/// Exhaustive per-view rate search over a fixed camera set. Viewpoints
/// outside the span of `cameras` are rendered from the nearest one.
fn best_rates(
    catalog: &Catalog,
    eval: &Evaluator,
    cameras: &[u32],
    window: &NavigationWindow,
    budget: f64,
) -> Result<DownloadPlan, SolveError> {
    let lists: Vec<&[u32]> = cameras
        .iter()
        .map(|&c| catalog.rates_for(c).ok_or(SolveError::Uncoverable))
        .collect::<Result<_, _>>()?;
    let mut best: Option<(f64, Vec<Representation>, u64)> = None;
    let mut pick = vec![0usize; cameras.len()];
    loop {
        let items: Vec<Representation> = cameras
            .iter()
            .zip(&pick)
            .zip(&lists)
            .map(|((&view, &k), rates)| Representation { view, rate: rates[k] })
            .collect();
        let cost: u64 = items.iter().map(|r| catalog.cost(r.rate) as u64).sum();
        if cost as f64 <= budget + 1e-9 {
            let anchors: Vec<Anchor> = items.iter().map(|r| eval.anchor(r.view, r.rate)).collect();
            let value = eval.window_mean(&anchors, window, Coverage::OneSided)?;
            let better = best.as_ref().is_none_or(|(bv, bi, bc)| {
                candidate_order(value, &items, cost, *bv, bi, *bc) == Ordering::Less
            });
            if better {
                best = Some((value, items, cost));
            }
        }
        // odometer increment
        let mut i = 0;
        while i < pick.len() {
            pick[i] += 1;
            if pick[i] < lists[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
        if i == pick.len() {
            break;
        }
    }
    match best {
        Some((value, items, _)) => {
            let mut plan = DownloadPlan::from_items(items, catalog.depth_rate_overhead)?;
            plan.distortion = value;
            Ok(plan)
        }
        None => Err(SolveError::Infeasible {
            cheapest_kbps: lists.iter().map(|r| catalog.cost(r[0])).sum(),
        }),
    }
}

/// Cameras requested by [`rate_adaptation`] for a user at grid index
/// `predicted`.
pub fn rate_adaptation_views(catalog: &Catalog, predicted: u32, window: &NavigationWindow) -> Vec<u32> {
    let grid = &catalog.grid;
    let cams: Vec<u32> = catalog.cameras().collect();
    let idx = |c: u32| grid.camera_index(c);
    if cams.len() < 2 {
        return cams;
    }
    // enclosing pair: largest camera at or left of the user, and the next one
    let mut k = cams.iter().rposition(|&c| idx(c) <= predicted).unwrap_or(0);
    if k + 1 == cams.len() {
        k -= 1;
    }
    let (l, r) = (k, k + 1);
    let mut out = vec![cams[l], cams[r]];
    let over_left = idx(cams[l]).saturating_sub(window.left);
    let over_right = window.right.saturating_sub(idx(cams[r]));
    if over_left.max(over_right) > 1 {
        let third = if over_right >= over_left {
            cams.get(r + 1).copied()
        } else {
            l.checked_sub(1).map(|i| cams[i])
        };
        if let Some(c) = third {
            out.push(c);
            out.sort_by_key(|&c| idx(c));
        }
    }
    out
}

pub fn rate_adaptation(
    catalog: &Catalog,
    profile: &VideoProfile,
    predicted: u32,
    window: &NavigationWindow,
    budget_kbps: f64,
) -> Result<DownloadPlan, SolveError> {
    let budget = check_budget(budget_kbps)?;
    let eval = Evaluator::new(catalog.grid, profile, catalog.coding_mode)?;
    let cameras = rate_adaptation_views(catalog, predicted, window);
    if cameras.is_empty() {
        return Err(SolveError::Uncoverable);
    }
    best_rates(catalog, &eval, &cameras, window, budget)
}

/// Lateral cameras `{largest ≤ U_L, smallest ≥ U_R}` with optimized rates.
/// A window sitting exactly on one camera yields a single view.
pub fn two_views_rate_adaptation(
    catalog: &Catalog,
    profile: &VideoProfile,
    window: &NavigationWindow,
    budget_kbps: f64,
) -> Result<DownloadPlan, SolveError> {
    let budget = check_budget(budget_kbps)?;
    let eval = Evaluator::new(catalog.grid, profile, catalog.coding_mode)?;
    let left = catalog.left_anchor(window.left).ok_or(SolveError::Uncoverable)?;
    let right = catalog.right_anchor(window.right).ok_or(SolveError::Uncoverable)?;
    let mut cameras = vec![left.camera];
    if right.camera != left.camera {
        cameras.push(right.camera);
    }
    best_rates(catalog, &eval, &cameras, window, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load_catalog, presets};
    use crate::distortion::one_sided_distortion;
    use crate::dp::solve_optimal;

    #[test]
    fn view_adaptation_drags_in_partner() {
        let (cat, p) = load_catalog(presets::L1, "dancer").unwrap();
        let joint = JointSegmentCatalog::from_catalog(&cat, &p).unwrap();
        assert_eq!(joint.segments, vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8], vec![9, 10]]);
        let w = NavigationWindow::new(&cat.grid, 5.5, 6.5).unwrap();
        let plan = view_adaptation(&joint, &w, 20000.0).unwrap();
        assert_eq!(plan.views().collect::<Vec<_>>(), vec![5, 6, 7, 8]);
        let r0 = plan.items[0].rate;
        assert!(plan.rates().all(|r| r == r0));
    }

    #[test]
    fn view_adaptation_odd_set() {
        let (cat, p) = load_catalog(presets::L2, "hall").unwrap();
        let joint = JointSegmentCatalog::from_catalog(&cat, &p).unwrap();
        assert_eq!(joint.segments, vec![vec![1, 3], vec![5, 7], vec![10]]);
        let w = NavigationWindow::new(&cat.grid, 7.5, 9.5).unwrap();
        let plan = view_adaptation(&joint, &w, 1e6).unwrap();
        assert_eq!(plan.views().collect::<Vec<_>>(), vec![5, 7, 10]);
        let w = NavigationWindow::new(&cat.grid, 2.0, 9.0).unwrap();
        assert!(matches!(
            view_adaptation(&joint, &w, 250.0),
            Err(SolveError::Infeasible { cheapest_kbps: 300 })
        ));
    }

    #[test]
    fn rate_adaptation_prefetch() {
        let (cat, p) = load_catalog(presets::L1, "dancer").unwrap();
        let g = cat.grid;
        let at = |u: f64| g.index_of(u).unwrap();
        let inside = NavigationWindow::new(&g, 3.2, 3.8).unwrap();
        assert_eq!(rate_adaptation_views(&cat, at(3.5), &inside), vec![3, 4]);
        let spill = NavigationWindow::new(&g, 3.2, 4.5).unwrap();
        assert_eq!(rate_adaptation_views(&cat, at(3.5), &spill), vec![3, 4, 5]);
        let left = NavigationWindow::new(&g, 2.5, 3.9).unwrap();
        assert_eq!(rate_adaptation_views(&cat, at(3.5), &left), vec![2, 3, 4]);
        // exactly one step past the pair is tolerated
        let edge = NavigationWindow::new(&g, 3.0, 4.1).unwrap();
        assert_eq!(rate_adaptation_views(&cat, at(3.5), &edge), vec![3, 4]);
        let plan = rate_adaptation(&cat, &p, at(3.5), &spill, 30000.0).unwrap();
        assert_eq!(plan.len(), 3);
    }

    #[test]
    fn rate_adaptation_charges_uncovered_one_sided() {
        let (cat, p) = load_catalog(presets::L1, "hall").unwrap();
        let g = cat.grid;
        let w = NavigationWindow::new(&g, 3.0, 6.0).unwrap();
        // pair (3,4) plus prefetched 5; viewpoints above 5 see only camera 5
        let plan = rate_adaptation(&cat, &p, g.index_of(3.5).unwrap(), &w, 1e6).unwrap();
        assert_eq!(plan.views().collect::<Vec<_>>(), vec![3, 4, 5]);
        let top = plan.items[2];
        let far = one_sided_distortion(6.0, top, &p, CodingMode::Independent).unwrap();
        let eval = Evaluator::new(g, &p, CodingMode::Independent).unwrap();
        assert!((eval.one_sided(g.index_of(6.0).unwrap(), eval.anchor(5, top.rate)) - far).abs() < 1e-12);
    }

    #[test]
    fn two_views_dominated_by_optimum() {
        let (cat, p) = load_catalog(presets::L1, "hall").unwrap();
        let w = NavigationWindow::new(&cat.grid, 1.5, 9.5).unwrap();
        let two = two_views_rate_adaptation(&cat, &p, &w, 10000.0).unwrap();
        let opt = solve_optimal(&cat, &p, &w, 10000.0).unwrap();
        assert_eq!(two.views().collect::<Vec<_>>(), vec![1, 10]);
        assert!(two.distortion >= opt.distortion);
    }

    #[test]
    fn two_views_on_a_camera() {
        let (cat, p) = load_catalog(presets::L1, "hall").unwrap();
        let w = NavigationWindow::new(&cat.grid, 4.0, 4.0).unwrap();
        let plan = two_views_rate_adaptation(&cat, &p, &w, 1e6).unwrap();
        assert_eq!(plan.views().collect::<Vec<_>>(), vec![4]);
    }
}
