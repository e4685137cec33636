//! Numerical equilibrium of the binned game by damped fictitious play.
//!
//! The strategy space is cut into `K` equal bins and every choice is moved to
//! its bin midpoint. Two players in the same bin are genuinely tied and split
//! the win at random, so the binned game is a finite symmetric game whose
//! payoffs are computed exactly. Nothing in the iteration uses the closed-form
//! equilibrium; it only appears in the comparison fields of [`SolverReport`].

use serde::Serialize;

use crate::analytic::NashEquilibrium;
use crate::error::{Error, Result};

/// Smallest number of bins accepted by [`solve`].
pub const MIN_BINS: usize = 64;

/// Tolerance on `Σ weights = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A bin is counted in the support when its weight exceeds this over `K`.
pub const SUPPORT_THRESHOLD_FACTOR: f64 = 0.01;

const CHECKPOINTS: usize = 24;

/// Weights on the midpoints of `K` uniform bins of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteStrategy {
    grid: Vec<f64>,
    weights: Vec<f64>,
}

/// Midpoints `(i + 1/2)/K`.
pub fn bin_midpoints(bins: usize) -> Vec<f64> {
    (0..bins).map(|i| (i as f64 + 0.5) / bins as f64).collect()
}

impl DiscreteStrategy {
    pub fn uniform(bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidArgument("need at least one bin".into()));
        }
        Ok(DiscreteStrategy {
            grid: bin_midpoints(bins),
            weights: vec![1.0 / bins as f64; bins],
        })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("need at least one bin".into()));
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::Domain {
                name: "weight",
                value: w,
                domain: "[0, inf)",
            });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(DiscreteStrategy {
            grid: bin_midpoints(weights.len()),
            weights,
        })
    }

    /// A single atom on the bin containing `x`.
    pub fn atom(bins: usize, x: f64) -> Result<Self> {
        let mut weights = vec![0.0; bins];
        weights[bin_of(bins, x)] = 1.0;
        Self::from_weights(weights)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn first_moment(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x * w)
            .sum()
    }

    /// Largest midpoint whose weight exceeds `1/(100 K)`.
    pub fn support_edge_estimate(&self) -> f64 {
        let threshold = SUPPORT_THRESHOLD_FACTOR / self.bins() as f64;
        self.grid
            .iter()
            .zip(&self.weights)
            .rev()
            .find(|(_, &w)| w > threshold)
            .map_or(0.0, |(&x, _)| x)
    }

    /// Weight per unit length in each bin.
    pub fn density(&self) -> Vec<f64> {
        let k = self.bins() as f64;
        self.weights.iter().map(|w| w * k).collect()
    }
}

/// Index of the bin containing `x`; `x = 1` belongs to the last bin.
pub fn bin_of(bins: usize, x: f64) -> usize {
    ((x * bins as f64) as usize).min(bins - 1)
}

/// `[(S+T)^N - S^N] / (N T)`, the survival-win probability summed over the
/// number of tied opponents; tends to `S^(N-1)` as `T → 0`.
pub fn tie_share(s: f64, t: f64, n_players: usize) -> f64 {
    let n = n_players as i32;
    if t <= 0.0 {
        return s.powi(n - 1);
    }
    if s <= 0.0 {
        return t.powi(n - 1) / n as f64;
    }
    if t < s {
        // S^N (exp(N ln(1 + T/S)) - 1), free of cancellation for small T/S.
        s.powi(n) * (n as f64 * (t / s).ln_1p()).exp_m1() / (n as f64 * t)
    } else {
        ((s + t).powi(n) - s.powi(n)) / (n as f64 * t)
    }
}

/// Largest `N` for which [`TieKernel`] uses the polynomial form.
const POLYNOMIAL_TIE_MAX_PLAYERS: usize = 16;

/// Evaluates [`tie_share`] for a fixed `N`.
///
/// For small `N` the expansion `Σ_k C(N,k+1)/N T^k S^(N-1-k)` is summed
/// directly: every term is positive, so there is no cancellation and no
/// transcendental call.
#[derive(Debug, Clone)]
struct TieKernel {
    n_players: usize,
    // coeffs[k] = C(N, k+1) / N
    coeffs: Vec<f64>,
}

impl TieKernel {
    fn new(n_players: usize) -> Self {
        let n = n_players as f64;
        let mut coeffs = Vec::with_capacity(n_players);
        let mut binom = n; // C(N, 1)
        for k in 0..n_players {
            coeffs.push(binom / n);
            binom = binom * (n - (k as f64 + 1.0)) / (k as f64 + 2.0);
        }
        TieKernel { n_players, coeffs }
    }

    fn eval(&self, s: f64, t: f64) -> f64 {
        if self.n_players > POLYNOMIAL_TIE_MAX_PLAYERS {
            return tie_share(s, t, self.n_players);
        }
        // Σ_k c_k T^k S^(m-k) by a homogeneous Horner scheme.
        let m = self.n_players - 1;
        let mut p = self.coeffs[m];
        let mut s_pow = 1.0;
        for c in self.coeffs[..m].iter().rev() {
            s_pow *= s;
            p = p * t + c * s_pow;
        }
        p
    }
}

fn win_prob(kernel: &TieKernel, x: f64, e: f64, l: f64, t: f64) -> f64 {
    let n = kernel.n_players as f64;
    (1.0 - x) * kernel.eval(e + l, t) + x * e.powi(kernel.n_players as i32 - 1) / n
}

/// Win probability of a player choosing bin `i` against `N-1` opponents on
/// `f`, with within-bin ties split uniformly.
pub fn discrete_win_prob(n_players: usize, f: &DiscreteStrategy, i: usize) -> Result<f64> {
    if i >= f.bins() {
        return Err(Error::InvalidArgument(format!(
            "bin {i} out of range for {} bins",
            f.bins()
        )));
    }
    let e: f64 = f.first_moment();
    let l: f64 = f.grid[..i]
        .iter()
        .zip(&f.weights[..i])
        .map(|(x, w)| w * (1.0 - x))
        .sum();
    let t = f.weights[i] * (1.0 - f.grid[i]);
    Ok(win_prob(&TieKernel::new(n_players), f.grid[i], e, l, t))
}

/// Gains `N P_i - 1` of every pure bin, in O(K) via a running sum of
/// strictly-lower survivors.
pub fn gains(n_players: usize, f: &DiscreteStrategy) -> Vec<f64> {
    let n = n_players as f64;
    let kernel = TieKernel::new(n_players);
    let e = f.first_moment();
    let mut lower = 0.0;
    f.grid
        .iter()
        .zip(&f.weights)
        .map(|(&x, &w)| {
            let t = w * (1.0 - x);
            let g = n * win_prob(&kernel, x, e, lower, t) - 1.0;
            lower += t;
            g
        })
        .collect()
}

/// One best-response evaluation: returns the uniform distribution over all
/// bins within `epsilon` of the best gain, and the best gain itself.
pub fn best_response_step(
    n_players: usize,
    f: &DiscreteStrategy,
    epsilon: f64,
) -> (DiscreteStrategy, f64) {
    let g = gains(n_players, f);
    let (support, residual) = best_response_set(&g, epsilon);
    let mut weights = vec![0.0; f.bins()];
    let w = 1.0 / support.len() as f64;
    for i in support {
        weights[i] = w;
    }
    (
        DiscreteStrategy {
            grid: f.grid.clone(),
            weights,
        },
        residual,
    )
}

fn best_response_set(gains: &[f64], epsilon: f64) -> (Vec<usize>, f64) {
    let best = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let set = gains
        .iter()
        .enumerate()
        .filter(|(_, &g)| g >= best - epsilon)
        .map(|(i, _)| i)
        .collect();
    (set, best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub n_players: usize,
    pub bins: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Largest gain of any pure bin against the returned strategy.
    pub residual: f64,
    pub tolerance: f64,
    pub min_iter: usize,
    pub epsilon: f64,
    pub l1_distance_to_analytic: f64,
    pub support_edge_estimate: f64,
    pub first_moment: f64,
    /// `(iteration, best residual so far)` on a log-spaced schedule.
    pub checkpoints: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub strategy: DiscreteStrategy,
    pub report: SolverReport,
    /// Residual of every iterate, in order.
    pub residual_trace: Vec<f64>,
}

/// Iterations run before the stopping test is applied, per bin.
pub const DEFAULT_MIN_ITER_PER_BIN: usize = 512;

/// Knobs of [`solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop once the residual is at most this (after `min_iter`).
    pub tol: f64,
    /// No stopping before this many iterations.
    pub min_iter: usize,
    /// Best-response spread at iteration `t` is `epsilon / sqrt(t + 1)`.
    pub epsilon: f64,
}

impl SolverOptions {
    /// Defaults for a grid of `bins`: `min_iter = 512 K`, `epsilon = 10 tol`.
    pub fn new(bins: usize, max_iter: usize, tol: f64) -> Self {
        SolverOptions {
            max_iter,
            tol,
            min_iter: (DEFAULT_MIN_ITER_PER_BIN * bins).min(max_iter),
            epsilon: 10.0 * tol,
        }
    }
}

/// [`solve_with`] using [`SolverOptions::new`].
pub fn solve(n_players: usize, bins: usize, max_iter: usize, tol: f64) -> Result<Solution> {
    solve_with(n_players, bins, &SolverOptions::new(bins, max_iter, tol))
}

/// Damped fictitious play `f ← (1-η) f + η BR(f)`, `η = 1/(t+2)`, started
/// from uniform weights. `BR(f)` is uniform over every bin whose gain is
/// within `ε_t` of the best.
///
/// Stops at the first iterate past `min_iter` whose residual is at most
/// `tol`. Otherwise runs `max_iter` iterations and flags `converged = false`.
/// Either way the iterate with the smallest residual is returned.
pub fn solve_with(n_players: usize, bins: usize, opts: &SolverOptions) -> Result<Solution> {
    if n_players < 2 {
        return Err(Error::InvalidArgument(format!(
            "the game needs at least 2 players, got {n_players}"
        )));
    }
    if bins < MIN_BINS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_BINS} bins, got {bins}"
        )));
    }
    let tol = opts.tol;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tol must be positive, got {tol}"
        )));
    }
    if !(opts.epsilon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative, got {}",
            opts.epsilon
        )));
    }
    let max_iter = opts.max_iter;
    let schedule = checkpoint_schedule(max_iter);
    let mut next_checkpoint = 0;
    let mut checkpoints = Vec::with_capacity(schedule.len());

    let kernel = TieKernel::new(n_players);
    let n = n_players as f64;
    let grid = bin_midpoints(bins);
    let survive: Vec<f64> = grid.iter().map(|x| 1.0 - x).collect();
    // (t + 1) f_t: plain accumulated best-response mass, rescaled on read.
    let mut acc = vec![1.0 / bins as f64; bins];
    let mut moment_acc: f64 = grid.iter().zip(&acc).map(|(x, a)| x * a).sum();
    let mut g = vec![0.0; bins];
    let mut best = acc.clone();
    let mut best_residual = f64::INFINITY;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for t in 0..=max_iter {
        let scale = 1.0 / (t as f64 + 1.0);
        let e = scale * moment_acc;
        let above = e.powi(n_players as i32 - 1) / n;
        let mut lower = 0.0;
        let mut residual = f64::NEG_INFINITY;
        for i in 0..bins {
            let tie = acc[i] * scale * survive[i];
            let p = survive[i] * kernel.eval(e + lower, tie) + grid[i] * above;
            lower += tie;
            g[i] = n * p - 1.0;
            residual = residual.max(g[i]);
        }
        trace.push(residual);
        if residual < best_residual {
            best_residual = residual;
            for (b, a) in best.iter_mut().zip(&acc) {
                *b = a * scale;
            }
        }
        while next_checkpoint < schedule.len() && schedule[next_checkpoint] <= t {
            checkpoints.push((t, best_residual));
            next_checkpoint += 1;
        }
        iterations = t;
        if residual <= tol && t >= opts.min_iter {
            converged = true;
            break;
        }
        if t == max_iter {
            break;
        }
        let cutoff = residual - opts.epsilon / (t as f64 + 1.0).sqrt();
        let count = g.iter().filter(|&&x| x >= cutoff).count();
        let share = 1.0 / count as f64;
        for ((a, &x), &gi) in acc.iter_mut().zip(&grid).zip(&g) {
            if gi >= cutoff {
                *a += share;
                moment_acc += share * x;
            }
        }
    }
    if checkpoints.last().map(|c| c.0) != Some(iterations) {
        checkpoints.push((iterations, best_residual));
    }

    // Undo the drift of the running sum.
    let sum: f64 = best.iter().sum();
    best.iter_mut().for_each(|w| *w /= sum);
    let best = DiscreteStrategy {
        grid,
        weights: best,
    };
    let analytic = binned_analytic(n_players, bins)?;
    let l1 = best
        .weights
        .iter()
        .zip(&analytic)
        .map(|(w, p)| (w - p).abs())
        .sum();
    let report = SolverReport {
        n_players,
        bins,
        iterations,
        converged,
        residual: best_residual,
        tolerance: tol,
        min_iter: opts.min_iter,
        epsilon: opts.epsilon,
        l1_distance_to_analytic: l1,
        support_edge_estimate: best.support_edge_estimate(),
        first_moment: best.first_moment(),
        checkpoints,
    };
    Ok(Solution {
        strategy: best,
        report,
        residual_trace: trace,
    })
}

/// Mass of the closed-form equilibrium in each of `bins` uniform bins.
pub fn binned_analytic(n_players: usize, bins: usize) -> Result<Vec<f64>> {
    let eq = NashEquilibrium::new(n_players)?;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| eq.cdf((k as f64 / bins as f64).min(1.0)))
        .collect::<Result<_>>()?;
    Ok(edges.windows(2).map(|w| w[1] - w[0]).collect())
}

fn checkpoint_schedule(max_iter: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (0..CHECKPOINTS)
        .map(|k| {
            let frac = k as f64 / (CHECKPOINTS - 1) as f64;
            ((max_iter.max(1) as f64).powf(frac)).round() as usize
        })
        .collect();
    s.insert(0, 0);
    s.dedup();
    s
}
