use nash_elim::engine::{win_probability_oracle, GameConfig, StrategyProfile};
use nash_elim::solver::{
    best_response_step, binned_analytic, discrete_win_prob, gains, solve, solve_with, tie_share,
    DiscreteStrategy, SolverOptions, WEIGHT_SUM_TOL,
};
use proptest::prelude::*;

/// Expected oracle win probability of bin `i` over every opponent bin
/// assignment.
fn exhaustive(n: usize, f: &DiscreteStrategy, i: usize) -> f64 {
    let k = f.bins();
    let cfg = GameConfig::new(n, 0).unwrap();
    let mut assignment = vec![0usize; n - 1];
    let mut total = 0.0;
    loop {
        let weight: f64 = assignment.iter().map(|&j| f.weights()[j]).product();
        if weight > 0.0 {
            let mut v = vec![f.grid()[i]];
            v.extend(assignment.iter().map(|&j| f.grid()[j]));
            total +=
                weight * win_probability_oracle(&cfg, &StrategyProfile::new(v).unwrap()).unwrap();
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == assignment.len() {
                return total;
            }
            assignment[pos] += 1;
            if assignment[pos] < k {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

fn weights(raw: Vec<f64>) -> DiscreteStrategy {
    let sum: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
    // absorb rounding so the sum check holds
    let drift = 1.0 - w.iter().sum::<f64>();
    w[0] += drift;
    DiscreteStrategy::from_weights(w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn discrete_matches_oracle_exhaustively(
        (n, raw) in prop_oneof![
            Just((2usize, 16usize)), Just((3, 16)), Just((4, 8)), Just((5, 6)), Just((6, 4))
        ]
        .prop_flat_map(|(n, k)| (Just(n), prop::collection::vec(0.0f64..1.0, k)))
    ) {
        prop_assume!(raw.iter().sum::<f64>() > 0.1);
        let f = weights(raw);
        let g = gains(n, &f);
        for (i, gi) in g.iter().enumerate() {
            let p = discrete_win_prob(n, &f, i).unwrap();
            let oracle = exhaustive(n, &f, i);
            prop_assert!((p - oracle).abs() <= 1e-10, "N={} bin {}: {} vs {}", n, i, p, oracle);
            prop_assert!((gi - (n as f64 * p - 1.0)).abs() <= 1e-12);
        }
    }

    #[test]
    fn tie_share_is_continuous_at_zero(s in 0.0f64..1.0, n in 2usize..40) {
        prop_assert!((tie_share(s, 1e-12, n) - tie_share(s, 0.0, n)).abs() <= 1e-8);
    }
}

#[test]
fn discrete_examples() {
    let f = DiscreteStrategy::atom(10, 0.5).unwrap();
    // midpoints of 10 bins: 0.55 holds the atom
    let i = f
        .grid()
        .iter()
        .position(|&x| (x - 0.55).abs() < 1e-12)
        .unwrap();
    assert!((discrete_win_prob(2, &f, i).unwrap() - 0.5).abs() < 1e-15);

    let mut w = vec![0.0; 5];
    w[2] = 1.0;
    let f = DiscreteStrategy::from_weights(w).unwrap();
    assert_eq!(f.grid()[2], 0.5);
    // the 0.6-analogue: midpoint 0.7, survive branch 0.3, all-out 0.7·0.5/2
    assert!((discrete_win_prob(2, &f, 3).unwrap() - (0.3 + 0.7 * 0.25)).abs() < 1e-15);

    // support strictly above bin 0: wins only if everyone above is out
    let mut w = vec![0.0; 8];
    w[6] = 0.25;
    w[7] = 0.75;
    let f = DiscreteStrategy::from_weights(w).unwrap();
    let e = f.first_moment();
    for n in 2..=5 {
        let x = f.grid()[0];
        let expected = (1.0 - x) * e.powi(n as i32 - 1) + x * e.powi(n as i32 - 1) / n as f64;
        assert!((discrete_win_prob(n, &f, 0).unwrap() - expected).abs() < 1e-15);
    }
}

#[test]
fn binned_analytic_is_nearly_indifferent() {
    let f = DiscreteStrategy::from_weights(binned_analytic(3, 4096).unwrap()).unwrap();
    let (_, residual) = best_response_step(3, &f, 1e-4);
    assert!(residual <= 5e-3, "{residual}");
}

#[test]
fn best_response_examples() {
    let atom = DiscreteStrategy::atom(128, 0.5).unwrap();
    let (br, residual) = best_response_step(2, &atom, 1e-6);
    assert!(residual > 0.0);
    let atom_x = atom.grid()[nash_elim::solver::bin_of(128, 0.5)];
    for (x, w) in br.grid().iter().zip(br.weights()) {
        if *w > 0.0 {
            assert!(*x > atom_x);
        }
    }
    let (_, residual) = best_response_step(4, &DiscreteStrategy::uniform(512).unwrap(), 1e-4);
    assert!(residual > 0.0);
}

#[test]
fn every_iterate_is_a_distribution() {
    for max_iter in 0..60 {
        let mut opts = SolverOptions::new(64, max_iter, 1e-12);
        opts.min_iter = 0;
        let sol = solve_with(3, 64, &opts).unwrap();
        let w = sol.strategy.weights();
        assert!(w.iter().all(|&x| x >= 0.0));
        assert!(
            (w.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL,
            "t={max_iter}"
        );
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

#[test]
fn residual_trend_is_decreasing() {
    for n in [2, 3, 5] {
        let mut opts = SolverOptions::new(256, 1 << 15, 5e-3);
        opts.min_iter = opts.max_iter;
        let sol = solve_with(n, 256, &opts).unwrap();
        let trace = &sol.residual_trace;
        // past the start-up transient of the first few hundred steps
        let medians: Vec<f64> = (8..15)
            .map(|p| {
                let t = 1usize << p;
                median(&trace[t..=2 * t])
            })
            .collect();
        assert!(
            medians.windows(2).all(|w| w[1] < w[0]),
            "N={n}: {medians:?}"
        );
    }
}

#[test]
fn solve_flags_and_options() {
    let sol = solve(3, 64, 5, 1e-9).unwrap();
    assert!(!sol.report.converged);
    assert_eq!(sol.report.iterations, 5);

    // with no warm-up the first iterate under tol stops the run
    let mut opts = SolverOptions::new(128, 100_000, 5e-2);
    opts.min_iter = 0;
    let early = solve_with(3, 128, &opts).unwrap();
    assert!(early.report.converged);
    assert!(early.report.residual <= 5e-2);
    assert_eq!(*early.residual_trace.last().unwrap(), early.report.residual);

    opts.min_iter = 5000;
    let late = solve_with(3, 128, &opts).unwrap();
    assert_eq!(late.report.iterations, 5000);
    assert!(late.report.residual < early.report.residual);
    assert!(late.report.l1_distance_to_analytic < early.report.l1_distance_to_analytic);

    opts.epsilon = -1.0;
    assert!(solve_with(3, 128, &opts).is_err());
    assert!(solve(3, 63, 10, 1e-3).is_err());
}

#[test]
fn solve_is_deterministic() {
    let a = solve(4, 64, 3000, 1e-6).unwrap();
    let b = solve(4, 64, 3000, 1e-6).unwrap();
    assert_eq!(a.strategy, b.strategy);
    assert_eq!(a.report, b.report);
}

#[test]
fn solve_stays_independent_of_the_closed_form() {
    // the closed form may only appear after the iteration, for the report
    let src = include_str!("../src/solver.rs");
    let body =
        &src[src.find("pub fn solve_with").unwrap()..src.find("pub fn binned_analytic").unwrap()];
    let (iteration, report) = body.split_at(body.find("let analytic = binned_analytic").unwrap());
    for token in [
        "NashEquilibrium",
        "analytic::",
        "support_edge",
        "v_star",
        "c_norm",
    ] {
        assert!(!iteration.contains(token), "iteration mentions {token}");
    }
    assert!(report.contains("l1_distance_to_analytic"));
}
