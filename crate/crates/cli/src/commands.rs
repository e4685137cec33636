use std::path::{Path, PathBuf};

use serde::Serialize;

use nash_elim::analytic::{scaling_density, NashEquilibrium};
use nash_elim::engine::GameConfig;
use nash_elim::montecarlo::{run_tournament, TournamentConfig};
use nash_elim::response::{verify_equilibrium, MixedStrategy};
use nash_elim::solver::{binned_analytic, solve_with, SolverOptions, DEFAULT_MIN_ITER_PER_BIN};

use crate::format::{g17, Table};
use crate::{
    emit, write_file, Command, DensityArgs, Result, ScalingArgs, SimulateArgs, SolveArgs, Status,
    VerifyArgs,
};

/// Knots of the piecewise-linear stand-in for a perturbed density.
const PERTURB_KNOTS: usize = 4097;

/// Growth factor of the default `--max-iter` over `--min-iter`.
const MAX_ITER_FACTOR: usize = 2;

pub(crate) struct Run {
    pub command: &'static str,
    pub args: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub status: Status,
}

impl Run {
    fn new<P: Serialize>(command: &'static str, args: Vec<String>, params: &P) -> Self {
        Run {
            command,
            args,
            params: serde_json::to_value(params).expect("params serialize"),
            seed: None,
            outputs: Vec::new(),
            status: Status::Pass,
        }
    }

    fn output(&mut self, path: Option<&Path>) {
        if let Some(p) = path {
            self.outputs.push(p.to_path_buf());
        }
    }
}

pub(crate) fn dispatch(command: &Command) -> Result<Run> {
    match command {
        Command::Density(a) => density(a),
        Command::Scaling(a) => scaling(a),
        Command::Verify(a) => verify(a),
        Command::Solve(a) => solve(a),
        Command::Simulate(a) => simulate(a),
        Command::Replay(_) => unreachable!("replay is resolved before dispatch"),
    }
}

fn uniform(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let last = points - 1;
    (0..points)
        .map(|k| {
            if k == last {
                hi
            } else {
                lo + (hi - lo) * k as f64 / last as f64
            }
        })
        .collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn density(a: &DensityArgs) -> Result<Run> {
    let eq = NashEquilibrium::new(a.n)?;
    let mut table = Table::new(&["x", "f_star"]);
    for x in uniform(0.0, 1.0, a.points) {
        table.push_values(&[x, eq.density(x)?]);
    }
    emit(a.out.as_deref(), table.as_str())?;
    let args = vec![
        "density".into(),
        "--n".into(),
        a.n.to_string(),
        "--points".into(),
        a.points.to_string(),
    ];
    let mut run = Run::new("density", args, a);
    run.output(a.out.as_deref());
    Ok(run)
}

fn scaling(a: &ScalingArgs) -> Result<Run> {
    let eqs = a
        .n_list
        .iter()
        .map(|&n| NashEquilibrium::new(n))
        .collect::<nash_elim::Result<Vec<_>>>()?;
    let mut header = vec!["xi".to_string()];
    header.extend(a.n_list.iter().map(|n| format!("n_{n}")));
    header.push("limit".into());
    let mut table = Table::new(&header);
    for xi in uniform(a.xi_min, 0.0, a.points) {
        let mut row = vec![Some(xi)];
        // Points left of x = 0 are outside the game for small N.
        row.extend(eqs.iter().map(|eq| eq.rescaled_density(xi)));
        row.push(Some(scaling_density(xi)?));
        table.push(&row);
    }
    emit(a.out.as_deref(), table.as_str())?;
    let list = a
        .n_list
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let args = vec![
        "scaling".into(),
        "--n-list".into(),
        list,
        "--xi-min".into(),
        g17(a.xi_min),
        "--points".into(),
        a.points.to_string(),
    ];
    let mut run = Run::new("scaling", args, a);
    run.output(a.out.as_deref());
    Ok(run)
}

fn verify(a: &VerifyArgs) -> Result<Run> {
    let cfg = GameConfig::new(a.n, 0)?;
    let eq = NashEquilibrium::new(a.n)?;
    let edge = eq.support_edge;
    let f = if a.perturb == 0.0 {
        MixedStrategy::AnalyticNash(eq.clone())
    } else {
        let grid = uniform(0.0, edge, PERTURB_KNOTS);
        let values = grid
            .iter()
            .map(|&x| eq.density(x).map(|d| d * (1.0 + a.perturb)))
            .collect::<nash_elim::Result<Vec<_>>>()?;
        MixedStrategy::grid_density_unnormalized(grid, values)?
    };
    let report = verify_equilibrium(&cfg, &f, edge, a.grid)?;
    emit(a.out.as_deref(), &to_json(&report))?;
    let args = vec![
        "verify".into(),
        "--n".into(),
        a.n.to_string(),
        "--grid".into(),
        a.grid.to_string(),
        "--perturb".into(),
        g17(a.perturb),
        "--format".into(),
        "json".into(),
    ];
    let mut run = Run::new("verify", args, a);
    run.output(a.out.as_deref());
    if !report.passed {
        run.status = Status::Fail;
    }
    Ok(run)
}

fn solve(a: &SolveArgs) -> Result<Run> {
    let min_iter = a.min_iter.unwrap_or(DEFAULT_MIN_ITER_PER_BIN * a.bins);
    let max_iter = a
        .max_iter
        .unwrap_or(MAX_ITER_FACTOR * DEFAULT_MIN_ITER_PER_BIN * a.bins);
    let opts = SolverOptions {
        max_iter,
        tol: a.tol,
        min_iter: min_iter.min(max_iter),
        epsilon: a.epsilon.unwrap_or(10.0 * a.tol),
    };
    let solution = solve_with(a.n, a.bins, &opts)?;
    let analytic = binned_analytic(a.n, a.bins)?;
    let s = &solution.strategy;
    let mut table = Table::new(&["bin", "x", "weight", "density", "analytic_weight"]);
    for (i, ((&x, &w), &p)) in s.grid().iter().zip(s.weights()).zip(&analytic).enumerate() {
        table.push_values(&[i as f64, x, w, w * a.bins as f64, p]);
    }
    emit(a.out.as_deref(), table.as_str())?;
    let report = to_json(&solution.report);
    match (&a.report, &a.out) {
        (Some(p), _) => write_file(p, &report)?,
        (None, Some(_)) => emit(None, &report)?,
        (None, None) => eprint!("{report}"),
    }
    let args = vec![
        "solve".into(),
        "--n".into(),
        a.n.to_string(),
        "--bins".into(),
        a.bins.to_string(),
        "--tol".into(),
        g17(a.tol),
        "--max-iter".into(),
        opts.max_iter.to_string(),
        "--min-iter".into(),
        opts.min_iter.to_string(),
        "--epsilon".into(),
        g17(opts.epsilon),
    ];
    let mut run = Run::new("solve", args, &opts);
    run.params["n_players"] = a.n.into();
    run.params["bins"] = a.bins.into();
    run.output(a.out.as_deref());
    run.output(a.report.as_deref());
    if !solution.report.converged {
        run.status = Status::Fail;
    }
    Ok(run)
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    n_players: usize,
    rounds: u64,
    seed: u64,
    /// Pure choice of player 1, if pinned.
    deviate: Option<f64>,
    v_star: f64,
    mean_gain: Vec<f64>,
    std_error: Vec<f64>,
    win_counts: Vec<u64>,
    elimination_counts: Vec<u64>,
    elimination_frequency: Vec<f64>,
    elimination_std_error: Vec<f64>,
}

fn simulate(a: &SimulateArgs) -> Result<Run> {
    let game = GameConfig::new(a.n, a.seed)?;
    let nash = MixedStrategy::analytic_nash(a.n)?;
    let mut strategies = vec![nash; a.n];
    if let Some(x) = a.deviate {
        strategies[0] = MixedStrategy::pure_atom(x)?;
    }
    let est = run_tournament(&TournamentConfig::new(game, a.rounds, strategies)?);
    let players = 0..a.n;
    let report = SimulationReport {
        n_players: a.n,
        rounds: a.rounds,
        seed: a.seed,
        deviate: a.deviate,
        v_star: NashEquilibrium::new(a.n)?.v_star,
        elimination_frequency: players
            .clone()
            .map(|j| est.elimination_frequency(j))
            .collect(),
        elimination_std_error: players.map(|j| est.elimination_std_error(j)).collect(),
        mean_gain: est.mean_gain,
        std_error: est.std_error,
        win_counts: est.win_counts,
        elimination_counts: est.elimination_counts,
    };
    emit(a.out.as_deref(), &to_json(&report))?;
    let mut args = vec![
        "simulate".into(),
        "--n".into(),
        a.n.to_string(),
        "--rounds".into(),
        a.rounds.to_string(),
        "--seed".into(),
        a.seed.to_string(),
    ];
    if let Some(x) = a.deviate {
        args.push("--deviate".into());
        args.push(g17(x));
    }
    let mut run = Run::new("simulate", args, a);
    run.seed = Some(a.seed);
    run.output(a.out.as_deref());
    Ok(run)
}
