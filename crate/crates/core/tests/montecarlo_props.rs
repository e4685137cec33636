use nash_elim::analytic::NashEquilibrium;
use nash_elim::engine::GameConfig;
use nash_elim::montecarlo::{deviation_sweep, run_tournament, TournamentConfig};
use nash_elim::response::{expected_gain, expected_win_prob, MixedStrategy};

fn nash(n: usize) -> MixedStrategy {
    MixedStrategy::analytic_nash(n).unwrap()
}

#[test]
fn symmetric_nash_tournaments_are_fair() {
    for n in [2, 3, 5] {
        let game = GameConfig::new(n, 40 + n as u64).unwrap();
        let est = run_tournament(&TournamentConfig::symmetric(game, 400_000, nash(n)).unwrap());
        let v_star = NashEquilibrium::new(n).unwrap().v_star;
        for j in 0..n {
            assert!(
                est.mean_gain[j].abs() <= 4.0 * est.std_error[j],
                "N={n} player {j}"
            );
            let freq = est.elimination_frequency(j);
            assert!(
                (freq - v_star).abs() <= 4.0 * est.elimination_std_error(j),
                "N={n}: {freq}"
            );
        }
        assert_eq!(est.win_counts.iter().sum::<u64>(), 400_000);
    }
}

#[test]
fn gains_are_exactly_zero_sum() {
    let game = GameConfig::new(6, 3).unwrap();
    let mut strategies = vec![nash(6); 6];
    strategies[2] = MixedStrategy::pure_atom(0.95).unwrap();
    let est = run_tournament(&TournamentConfig::new(game, 100_003, strategies).unwrap());
    // integer accounting: winner +(N-1), everyone else -1
    let total: i64 = est
        .win_counts
        .iter()
        .map(|&w| 5 * w as i64 - (100_003 - w) as i64)
        .sum();
    assert_eq!(total, 0);
}

#[test]
fn pure_atom_pair_is_symmetric() {
    let game = GameConfig::new(2, 8).unwrap();
    let atom = MixedStrategy::pure_atom(0.5).unwrap();
    let est = run_tournament(&TournamentConfig::symmetric(game, 1_000_000, atom).unwrap());
    assert!(est.mean_gain[0].abs() <= 3.0 * est.std_error[0]);
}

#[test]
fn deviation_to_high_choice_loses() {
    let game = GameConfig::new(3, 17).unwrap();
    let mut strategies = vec![nash(3); 3];
    strategies[0] = MixedStrategy::pure_atom(0.9).unwrap();
    let est = run_tournament(&TournamentConfig::new(game, 1_000_000, strategies).unwrap());
    assert!(
        (est.mean_gain[0] + 0.4).abs() <= 3.0 * est.std_error[0],
        "{}",
        est.mean_gain[0]
    );
}

#[test]
fn empirical_response_matches_quadrature() {
    let xs = [0.0, 0.3, 0.6, 0.9, 1.0];
    for n in [2, 3, 5] {
        let game = GameConfig::new(n, 1000 + n as u64).unwrap();
        let f = nash(n);
        let sweep = deviation_sweep(&game, &f, &xs, 200_000).unwrap();
        assert_eq!(sweep.curve.x_values, xs);
        for (k, &x) in xs.iter().enumerate() {
            let target = expected_gain(&game, &f, x).unwrap();
            let p = expected_win_prob(&game, &f, x).unwrap();
            let se = sweep.gain_std_error[k];
            assert!(
                (sweep.curve.gain[k] - target).abs() <= 4.0 * se,
                "N={n} x={x}"
            );
            let sp = (p * (1.0 - p) / 200_000.0).sqrt();
            assert!((sweep.curve.win_prob[k] - p).abs() <= 4.0 * sp);
        }
        // x = 1 gives 1/N - 1; x = 0 is on the support
        let last = sweep.curve.gain[4];
        assert!((last - (1.0 / n as f64 - 1.0)).abs() <= 4.0 * sweep.gain_std_error[4]);
        assert!(sweep.curve.gain[0].abs() <= 4.0 * sweep.gain_std_error[0]);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let game = GameConfig::new(4, 77).unwrap();
    let cfg = TournamentConfig::symmetric(game, 200_000, nash(4)).unwrap();
    let run_with = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_tournament(&cfg))
    };
    let one = run_with(1);
    assert_eq!(one, run_with(3));
    assert_eq!(one, run_with(8));
}
