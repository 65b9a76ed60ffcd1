use proptest::prelude::*;

use navstream::baselines::two_views_rate_adaptation;
use navstream::catalog::{presets, CatalogFile, NavigationWindow, ViewpointGrid};
use navstream::dp::solve_optimal;
use navstream::environment::markov::transition_matrix;
use navstream::environment::navigation::steps_per_segment;
use navstream::environment::{BandwidthTrace, Channel, MarkovChannel, NavigationKind, NavigationModel};
use navstream::greedy::solve_greedy;
use navstream::oracle::{random_instance, solve_exhaustive};
use navstream::session::{run_session, Environment, PredictionMode, SessionConfig};
use navstream::{decide, Algorithm};

fn l1() -> CatalogFile {
    presets::load("L1").unwrap()
}

fn video() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("dancer"), Just("shark"), Just("hall")]
}

/// On-grid L1 window as (left, right) viewpoint indices.
fn l1_window() -> impl Strategy<Value = (u32, u32)> {
    (0u32..=90).prop_flat_map(|l| (Just(l), l..=90u32))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_matches_oracle(seed in any::<u64>()) {
        let inst = random_instance(seed);
        let dp = solve_optimal(&inst.catalog, &inst.profile, &inst.window, inst.budget_kbps);
        let or = solve_exhaustive(&inst.catalog, &inst.profile, &inst.window, inst.budget_kbps, true);
        match (dp, or) {
            (Ok(d), Ok(o)) => prop_assert!((d.distortion - o.plan.distortion).abs() <= 1e-9),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "dp {:?} vs oracle {:?}", a, b),
        }
    }

    #[test]
    fn plans_fit_budget_and_stay_in_range(
        v in video(),
        (l, r) in l1_window(),
        budget in 0.0f64..25_000.0,
    ) {
        let file = l1();
        let window = NavigationWindow { left: l, right: r };
        for algo in Algorithm::ALL {
            let d = decide(algo, &file.catalog, file.profile(v).unwrap(), &window, budget, Some(l)).unwrap();
            prop_assert!((0.0..=1.0).contains(&d.distortion));
            if let Some(p) = d.plan {
                prop_assert!(p.total_rate as f64 <= budget + 1e-9, "{algo} {} > {budget}", p.total_rate);
            }
        }
    }

    #[test]
    fn optimum_is_monotone_in_budget(
        v in video(),
        (l, r) in l1_window(),
        b1 in 0.0f64..20_000.0,
        extra in 0.0f64..10_000.0,
    ) {
        let file = l1();
        let window = NavigationWindow { left: l, right: r };
        let p = file.profile(v).unwrap();
        let lo = decide(Algorithm::Optimal, &file.catalog, p, &window, b1, None).unwrap();
        let hi = decide(Algorithm::Optimal, &file.catalog, p, &window, b1 + extra, None).unwrap();
        prop_assert!(hi.distortion <= lo.distortion + 1e-12);
    }

    #[test]
    fn heuristics_never_beat_the_optimum(
        v in video(),
        (l, r) in l1_window(),
        budget in 200.0f64..25_000.0,
    ) {
        let file = l1();
        let window = NavigationWindow { left: l, right: r };
        let p = file.profile(v).unwrap();
        let Ok(opt) = solve_optimal(&file.catalog, p, &window, budget) else {
            return Ok(());
        };
        if let Ok(g) = solve_greedy(&file.catalog, p, &window, budget) {
            prop_assert!(g.plan.distortion >= opt.distortion - 1e-12);
            let width = (r - l) as f64 * file.catalog.grid.delta();
            let bound = (width / (2.0 * file.catalog.grid.delta()) - 1e-9).ceil().max(0.0) as usize + 1;
            prop_assert!(g.iterations() <= bound);
        }
        if let Ok(t) = two_views_rate_adaptation(&file.catalog, p, &window, budget) {
            prop_assert!(t.distortion >= opt.distortion - 1e-12);
        }
    }

    #[test]
    fn markov_rows_are_distributions(n in 1usize..20, p_c in 0.0f64..=1.0) {
        for row in transition_matrix(n, p_c) {
            prop_assert!(row.iter().all(|&x| x >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn navigation_stays_on_grid(
        cams in 1u32..12,
        p in 0.0f64..=1.0,
        uniform in any::<bool>(),
        start_frac in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let grid = ViewpointGrid::new(cams, 0.1).unwrap();
        let start = (start_frac * grid.max_index() as f64) as u32;
        let kind = if uniform { NavigationKind::Uniform } else { NavigationKind::NonUniform(p) };
        let mut nav = NavigationModel::new(kind, &grid, start, 5, seed).unwrap();
        for _ in 0..50 {
            let before = nav.position();
            let after = nav.advance_segment();
            prop_assert!(after <= grid.max_index());
            prop_assert!(before.abs_diff(after) <= 5);
        }
    }

    #[test]
    fn trace_csv_roundtrip(samples in prop::collection::vec((0.01f64..100.0, 1.0f64..50_000.0), 1..20)) {
        let mut t = 0.0;
        let points: Vec<(f64, f64)> = samples
            .into_iter()
            .map(|(dt, c)| {
                let p = (t, c);
                t += dt;
                p
            })
            .collect();
        let trace = BandwidthTrace::new(points).unwrap();
        let back = BandwidthTrace::parse(&trace.to_csv()).unwrap();
        prop_assert_eq!(back.samples().len(), trace.samples().len());
        for (a, b) in back.samples().iter().zip(trace.samples()) {
            prop_assert!((a.0 - b.0).abs() <= 1e-6 * (1.0 + b.0.abs()));
            prop_assert!((a.1 - b.1).abs() <= 1e-6 * b.1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn session_buffer_is_never_negative(
        algo_i in 0usize..5,
        p_c in 0.0f64..=1.0,
        ewma in any::<bool>(),
        kappa in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let file = l1();
        let grid = file.catalog.grid;
        let cfg = SessionConfig {
            algo: Algorithm::ALL[algo_i],
            num_segments: 15,
            kappa,
            prediction: if ewma { PredictionMode::Ewma } else { PredictionMode::Exact },
            ..SessionConfig::default()
        };
        let env = Environment {
            channel: Channel::Markov(MarkovChannel::reference(p_c, seed).unwrap()),
            navigation: NavigationModel::new(
                NavigationKind::Uniform,
                &grid,
                14,
                steps_per_segment(cfg.rho, cfg.segment_duration, &grid),
                seed ^ 1,
            )
            .unwrap(),
        };
        let rec = run_session(&cfg, &file.catalog, file.profile("hall").unwrap(), env).unwrap();
        prop_assert_eq!(rec.segments.len(), 15);
        for s in &rec.segments {
            prop_assert!(s.buffer_s >= 0.0 && s.buffer_before_s >= 0.0);
            prop_assert!(s.stall_s >= 0.0 && s.idle_s >= 0.0);
            prop_assert!((0.0..=1.0).contains(&s.distortion));
            prop_assert!(s.total_rate as f64 <= s.predicted_kbps + 1e-9 || s.sentinel);
        }
    }
}

#[test]
fn catalog_toml_roundtrip() {
    for id in presets::ids() {
        let file = presets::load(id).unwrap();
        let back: CatalogFile = file.to_toml().parse().unwrap();
        assert_eq!(back, file, "{id}");
    }
}
