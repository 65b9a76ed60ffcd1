//! Optimal representation selection by dynamic programming.
//!
//! `Φ(v, r, c)` is the smallest distortion sum over the window viewpoints
//! right of camera `v` (coded at `r`) when `c` budget units remain for further
//! views. A transition to the next selected view `(v', r')` charges the
//! viewpoints strictly between `v` and `v'` (synthesized from the pair) plus
//! `v'` itself when it lies in the window, and recurses on `c - cost(r')`.
//! Recursion stops once a view at or right of `U_R` is selected. The answer
//! picks the leftmost view among cameras at or left of `U_L`.
//!
//! The budget axis is quantized with step `gcd(rates, depth overhead)`, so
//! every residual budget lands exactly on the grid.

use std::cmp::Ordering;
use std::time::Instant;

use crate::catalog::{Catalog, NavigationWindow, RdParams, Representation, VideoProfile, ViewRates, ViewpointGrid};
use crate::distortion::{DownloadPlan, Evaluator};
use crate::select::{cheapest_covering_cost, check_budget, structural_order, SolveError, TIE_EPSILON};
use crate::catalog::CodingMode;

/// Upper bound on `nodes × budget steps` kept in memory by one solve.
const MAX_TABLE_CELLS: usize = 50_000_000;
const TERMINAL: u32 = u32::MAX;

/// One (camera, rate) choice.
#[derive(Debug, Clone, Copy)]
struct Node {
    rep: Representation,
    index: u32,
    cost_units: usize,
    cost: u32,
    distortion: f64,
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Budget quantization step: gcd of all stored rates and the depth overhead.
pub fn budget_step(catalog: &Catalog) -> u32 {
    let mut g = catalog.depth_rate_overhead as u64;
    for r in catalog.representations() {
        g = gcd(g, r.rate as u64);
    }
    g.max(1) as u32
}

struct Table {
    cols: usize,
    value: Vec<f64>,
    next: Vec<u32>,
    count: Vec<u16>,
    cost: Vec<u32>,
}

impl Table {
    fn at(&self, node: usize, c: usize) -> usize {
        node * self.cols + c
    }
}

/// Returns the distortion-minimizing covering plan whose total rate fits
/// `budget_kbps`.
pub fn solve_optimal(
    catalog: &Catalog,
    profile: &VideoProfile,
    window: &NavigationWindow,
    budget_kbps: f64,
) -> Result<DownloadPlan, SolveError> {
    let eval = Evaluator::new(catalog.grid, profile, catalog.coding_mode)?;
    solve_with(catalog, &eval, window, budget_kbps)
}

pub(crate) fn solve_with(
    catalog: &Catalog,
    eval: &Evaluator,
    window: &NavigationWindow,
    budget_kbps: f64,
) -> Result<DownloadPlan, SolveError> {
    let budget_kbps = check_budget(budget_kbps)?;
    let cheapest = cheapest_covering_cost(catalog, window).ok_or(SolveError::Uncoverable)?;
    if cheapest as f64 > budget_kbps {
        return Err(SolveError::Infeasible {
            cheapest_kbps: cheapest,
        });
    }
    let grid = &catalog.grid;
    let step = budget_step(catalog) as u64;
    let nodes: Vec<Node> = catalog
        .views
        .iter()
        .flat_map(|v: &ViewRates| {
            let index = grid.camera_index(v.camera);
            v.rates.iter().map(move |&rate| (v.camera, index, rate))
        })
        .map(|(view, index, rate)| {
            let cost = catalog.cost(rate);
            Node {
                rep: Representation { view, rate },
                index,
                cost_units: (cost as u64 / step) as usize,
                cost,
                distortion: eval.coding(rate),
            }
        })
        .collect();
    // spending more than every view at its top rate is pointless
    let spendable: u64 = catalog
        .views
        .iter()
        .map(|v| catalog.cost(*v.rates.last().unwrap()) as u64)
        .sum();
    let budget_units = ((budget_kbps.min(spendable as f64) + 1e-9) / step as f64).floor() as usize;
    let cols = budget_units + 1;
    if nodes.len().saturating_mul(cols) > MAX_TABLE_CELLS {
        return Err(SolveError::TooLarge(format!(
            "{} nodes x {} budget steps",
            nodes.len(),
            cols
        )));
    }

    let n = nodes.len();
    // segment[k * n + m]: viewpoints in (v_k, v_m) plus v_m if in the window
    let mut segment = vec![f64::NAN; n * n];
    for (k, a) in nodes.iter().enumerate() {
        if a.index >= window.right {
            continue;
        }
        for (m, b) in nodes.iter().enumerate().filter(|(_, b)| b.index > a.index) {
            let (lo, hi) = ((a.index + 1).max(window.left), (b.index - 1).min(window.right));
            let mut sum = 0.0;
            let (left, right) = (anchor(a), anchor(b));
            for u in lo..=hi {
                if lo > hi {
                    break;
                }
                sum += eval.pair(u, left, right);
            }
            if window.contains(b.index) {
                sum += b.distortion;
            }
            segment[k * n + m] = sum;
        }
    }

    let mut table = Table {
        cols,
        value: vec![f64::INFINITY; n * cols],
        next: vec![TERMINAL; n * cols],
        count: vec![0; n * cols],
        cost: vec![0; n * cols],
    };
    // nodes are ordered by camera, so filling right-to-left sees every
    // successor first
    for k in (0..n).rev() {
        let a = nodes[k];
        if a.index >= window.right {
            for c in 0..cols {
                let at = table.at(k, c);
                table.value[at] = 0.0;
            }
            continue;
        }
        for c in 0..cols {
            let mut best: Option<(f64, usize, usize)> = None; // (value, m, residual)
            for m in (k + 1)..n {
                let b = nodes[m];
                if b.index <= a.index || b.cost_units > c {
                    continue;
                }
                let rest = c - b.cost_units;
                let tail = table.value[table.at(m, rest)];
                if !tail.is_finite() {
                    continue;
                }
                let value = segment[k * n + m] + tail;
                let better = match best {
                    None => true,
                    Some((bv, bm, brest)) => {
                        compare_suffix(&table, &nodes, value, m, rest, bv, bm, brest) == Ordering::Less
                    }
                };
                if better {
                    best = Some((value, m, rest));
                }
            }
            if let Some((value, m, rest)) = best {
                let at = table.at(k, c);
                let tail = table.at(m, rest);
                table.value[at] = value;
                table.next[at] = m as u32;
                table.count[at] = table.count[tail] + 1;
                table.cost[at] = table.cost[tail] + nodes[m].cost;
            }
        }
    }

    let mut best: Option<(f64, usize, usize)> = None;
    for (k, a) in nodes.iter().enumerate() {
        if a.index > window.left || a.cost_units > budget_units {
            continue;
        }
        let rest = budget_units - a.cost_units;
        let tail = table.value[table.at(k, rest)];
        if !tail.is_finite() {
            continue;
        }
        let head = if window.contains(a.index) { a.distortion } else { 0.0 };
        let value = head + tail;
        let better = match best {
            None => true,
            Some((bv, bk, brest)) => {
                let ord = if (value - bv).abs() > TIE_EPSILON {
                    value.total_cmp(&bv)
                } else {
                    let (x, xc) = walk(&table, &nodes, Some(k), rest);
                    let (y, yc) = walk(&table, &nodes, Some(bk), brest);
                    structural_order(&x, xc, &y, yc)
                };
                ord == Ordering::Less
            }
        };
        if better {
            best = Some((value, k, rest));
        }
    }
    let (value, k, rest) = best.ok_or(SolveError::Infeasible {
        cheapest_kbps: cheapest,
    })?;
    let (items, _) = walk(&table, &nodes, Some(k), rest);
    let mut plan = DownloadPlan::from_items(items, catalog.depth_rate_overhead)?;
    plan.distortion = value / window.len() as f64;
    debug_assert!(plan.total_rate as f64 <= budget_kbps + 1e-9);
    Ok(plan)
}

fn anchor(node: &Node) -> crate::distortion::Anchor {
    crate::distortion::Anchor {
        index: node.index,
        distortion: node.distortion,
    }
}

/// Representations selected from `start` onward, plus their total cost.
fn walk(table: &Table, nodes: &[Node], start: Option<usize>, residual: usize) -> (Vec<Representation>, u64) {
    let mut out = Vec::new();
    let mut cost = 0u64;
    let (mut cur, mut c) = (start, residual);
    while let Some(k) = cur {
        out.push(nodes[k].rep);
        cost += nodes[k].cost as u64;
        let next = table.next[table.at(k, c)];
        if next == TERMINAL {
            break;
        }
        let m = next as usize;
        c -= nodes[m].cost_units;
        cur = Some(m);
    }
    (out, cost)
}

#[allow(clippy::too_many_arguments)]
fn compare_suffix(
    table: &Table,
    nodes: &[Node],
    value: f64,
    m: usize,
    rest: usize,
    best_value: f64,
    best_m: usize,
    best_rest: usize,
) -> Ordering {
    if (value - best_value).abs() > TIE_EPSILON {
        return value.total_cmp(&best_value);
    }
    let (x, xc) = walk(table, nodes, Some(m), rest);
    let (y, yc) = walk(table, nodes, Some(best_m), best_rest);
    structural_order(&x, xc, &y, yc)
}

/// One timing sample of [`complexity_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub num_views: u32,
    pub num_rates: u32,
    pub budget_kbps: f64,
    pub seconds: f64,
}

/// Times `solve_optimal` on synthetic full-window instances of the given
/// `(views, rates)` sizes. Each sample is the fastest of `repeats` runs.
pub fn complexity_probe(sizes: &[(u32, u32)], budget_kbps: f64, repeats: usize) -> Vec<ProbeSample> {
    let profile = VideoProfile {
        name: "probe".into(),
        independent: RdParams {
            a: 0.98,
            b: 129.89,
            e: 544.39,
        },
        joint: None,
        xi: 1.32,
        inpaint_distortion: 0.35,
    };
    sizes
        .iter()
        .map(|&(num_views, num_rates)| {
            let grid = ViewpointGrid::with_steps(num_views.max(1), 10);
            let rates: Vec<u32> = (1..=num_rates).map(|i| 100 * i).collect();
            let catalog = Catalog {
                name: "probe".into(),
                description: None,
                approximate: false,
                grid,
                views: (1..=num_views.max(1))
                    .map(|camera| ViewRates {
                        camera,
                        rates: rates.clone(),
                    })
                    .collect(),
                depth_rate_overhead: 0,
                coding_mode: CodingMode::Independent,
            };
            let window = NavigationWindow {
                left: 0,
                right: grid.max_index(),
            };
            let seconds = (0..repeats.max(1))
                .map(|_| {
                    let t = Instant::now();
                    let _ = solve_optimal(&catalog, &profile, &window, budget_kbps);
                    t.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min);
            ProbeSample {
                num_views,
                num_rates,
                budget_kbps,
                seconds,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{load_catalog, presets, CatalogFile};
    use crate::distortion::navigation_distortion;

    fn toy(views: &[u32], rates: &[u32], cameras: u32, delta: f64) -> Catalog {
        let text = format!(
            "name = \"toy\"\n[grid]\nnum_cameras = {cameras}\ndelta = {delta}\n[uniform]\nviews = {views:?}\nrates_kbps = {rates:?}\n"
        );
        text.parse::<CatalogFile>().unwrap().catalog
    }

    fn dancer() -> VideoProfile {
        load_catalog(presets::L1, "dancer").unwrap().1
    }

    #[test]
    fn unique_feasible_plan() {
        let cat = toy(&[1, 2], &[1000], 2, 0.5);
        let w = NavigationWindow::new(&cat.grid, 1.0, 2.0).unwrap();
        let plan = solve_optimal(&cat, &dancer(), &w, 2000.0).unwrap();
        assert_eq!(
            plan.items,
            vec![Representation { view: 1, rate: 1000 }, Representation { view: 2, rate: 1000 }]
        );
        let direct = navigation_distortion(&plan, &w, &dancer(), &cat.grid, CodingMode::Independent).unwrap();
        assert!((plan.distortion - direct).abs() < 1e-12);
    }

    #[test]
    fn infeasible_reports_cheapest_cover() {
        let cat = toy(&[1, 2, 3], &[500, 2000], 3, 0.5);
        let w = NavigationWindow::new(&cat.grid, 1.5, 2.5).unwrap();
        assert_eq!(
            solve_optimal(&cat, &dancer(), &w, 999.0),
            Err(SolveError::Infeasible { cheapest_kbps: 1000 })
        );
    }

    #[test]
    fn uncoverable_window() {
        let cat = toy(&[2, 3], &[500], 3, 0.5);
        let w = NavigationWindow::new(&cat.grid, 1.5, 2.5).unwrap();
        assert_eq!(solve_optimal(&cat, &dancer(), &w, 1e6), Err(SolveError::Uncoverable));
    }

    #[test]
    fn single_camera_window() {
        let cat = toy(&[1, 2, 3], &[500, 2000], 3, 0.5);
        let w = NavigationWindow::new(&cat.grid, 2.0, 2.0).unwrap();
        let plan = solve_optimal(&cat, &dancer(), &w, 1e6).unwrap();
        assert_eq!(plan.items, vec![Representation { view: 2, rate: 2000 }]);
    }

    #[test]
    fn single_rate_reduces_to_view_selection() {
        let cat = toy(&[1, 2, 3, 4, 5], &[1000], 5, 0.5);
        let w = NavigationWindow::new(&cat.grid, 1.0, 5.0).unwrap();
        let hall = load_catalog(presets::L1, "hall").unwrap().1;
        let all = solve_optimal(&cat, &hall, &w, 5000.0).unwrap();
        assert_eq!(all.len(), 5);
        let two = solve_optimal(&cat, &hall, &w, 2000.0).unwrap();
        assert_eq!(two.views().collect::<Vec<_>>(), vec![1, 5]);
        assert!(all.distortion < two.distortion);
    }

    #[test]
    fn budget_step_uses_gcd() {
        let (cat, _) = load_catalog(presets::L1, "dancer").unwrap();
        assert_eq!(budget_step(&cat), 100);
        let mut cat = toy(&[1, 2], &[300, 450], 2, 1.0);
        assert_eq!(budget_step(&cat), 150);
        cat.depth_rate_overhead = 100;
        assert_eq!(budget_step(&cat), 50);
    }

    #[test]
    fn depth_overhead_counts_against_budget() {
        let mut cat = toy(&[1, 2], &[100, 1000], 2, 0.5);
        cat.depth_rate_overhead = 100;
        let w = NavigationWindow::new(&cat.grid, 1.0, 2.0).unwrap();
        let plan = solve_optimal(&cat, &dancer(), &w, 1300.0).unwrap();
        assert!(plan.total_rate <= 1300);
        assert_eq!(plan.total_rate, 1000 + 100 + 2 * 100);
    }

    #[test]
    fn probe_runs() {
        let s = complexity_probe(&[(2, 2), (3, 4)], 2000.0, 1);
        assert_eq!(s.len(), 2);
        assert!(s[0].seconds < 0.01);
    }
}
