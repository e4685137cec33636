//! Tournament simulation: many independent rounds with every player drawing
//! a fresh choice from their own strategy each round.
//!
//! Rounds are grouped in fixed-size blocks and block `k` draws from the
//! ChaCha stream `k` of the tournament seed, so results depend only on
//! `(seed, rounds)` and not on how blocks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{resolve_round, GameConfig};
use crate::error::{check_unit, Error, Result};
use crate::response::{MixedStrategy, ResponseCurve};

/// Rounds per RNG stream.
pub const BLOCK_ROUNDS: u64 = 1 << 14;

#[derive(Debug, Clone)]
pub struct TournamentConfig {
    pub game: GameConfig,
    pub rounds: u64,
    pub strategies: Vec<MixedStrategy>,
}

impl TournamentConfig {
    pub fn new(game: GameConfig, rounds: u64, strategies: Vec<MixedStrategy>) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::InvalidArgument("rounds must be at least 1".into()));
        }
        if strategies.len() != game.n_players {
            return Err(Error::InvalidArgument(format!(
                "{} strategies for a {}-player game",
                strategies.len(),
                game.n_players
            )));
        }
        Ok(TournamentConfig {
            game,
            rounds,
            strategies,
        })
    }

    /// Every player on the same strategy.
    pub fn symmetric(game: GameConfig, rounds: u64, strategy: MixedStrategy) -> Result<Self> {
        let strategies = vec![strategy; game.n_players];
        Self::new(game, rounds, strategies)
    }
}

/// Empirical gains of a tournament. Payoffs are kept as integer win counts,
/// so the per-player mean gains sum to zero up to the final division.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainEstimate {
    pub n_players: usize,
    pub rounds: u64,
    pub seed: u64,
    pub win_counts: Vec<u64>,
    pub elimination_counts: Vec<u64>,
    pub mean_gain: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl GainEstimate {
    fn from_counts(game: &GameConfig, rounds: u64, wins: Vec<u64>, eliminations: Vec<u64>) -> Self {
        let n = game.n();
        let r = rounds as f64;
        let mean_gain = wins
            .iter()
            .map(|&w| (game.n_players as f64 * w as f64 - r) / r)
            .collect();
        let std_error = wins
            .iter()
            .map(|&w| {
                if rounds < 2 {
                    return f64::NAN;
                }
                let p = w as f64 / r;
                // gain = N·1{win} - 1, so its sample std is N times the
                // Bernoulli one.
                n * (p * (1.0 - p) / (r - 1.0)).sqrt()
            })
            .collect();
        GainEstimate {
            n_players: game.n_players,
            rounds,
            seed: game.seed,
            win_counts: wins,
            elimination_counts: eliminations,
            mean_gain,
            std_error,
        }
    }

    pub fn win_frequency(&self, player: usize) -> f64 {
        self.win_counts[player] as f64 / self.rounds as f64
    }

    pub fn elimination_frequency(&self, player: usize) -> f64 {
        self.elimination_counts[player] as f64 / self.rounds as f64
    }

    /// Standard error of [`Self::elimination_frequency`].
    pub fn elimination_std_error(&self, player: usize) -> f64 {
        let p = self.elimination_frequency(player);
        let r = self.rounds as f64;
        (p * (1.0 - p) / (r - 1.0)).sqrt()
    }
}

struct Counts {
    wins: Vec<u64>,
    eliminations: Vec<u64>,
}

impl Counts {
    fn zero(n: usize) -> Self {
        Counts {
            wins: vec![0; n],
            eliminations: vec![0; n],
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.wins.iter_mut().zip(other.wins) {
            *a += b;
        }
        for (a, b) in self.eliminations.iter_mut().zip(other.eliminations) {
            *a += b;
        }
        self
    }
}

/// The RNG for block `block` of a run seeded with `seed`.
pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_block(cfg: &TournamentConfig, block: u64) -> Counts {
    let n = cfg.game.n_players;
    let start = block * BLOCK_ROUNDS;
    let len = BLOCK_ROUNDS.min(cfg.rounds - start);
    let mut rng = block_rng(cfg.game.seed, block);
    let mut counts = Counts::zero(n);
    let mut choices = vec![0.0; n];
    let mut eliminated = vec![false; n];
    for _ in 0..len {
        for (x, s) in choices.iter_mut().zip(&cfg.strategies) {
            *x = s.sample(&mut rng);
        }
        let winner = resolve_round(&choices, &mut rng, &mut eliminated);
        counts.wins[winner] += 1;
        for (c, &e) in counts.eliminations.iter_mut().zip(&eliminated) {
            *c += e as u64;
        }
    }
    counts
}

/// Plays `cfg.rounds` independent rounds and tallies wins and eliminations.
pub fn run_tournament(cfg: &TournamentConfig) -> GainEstimate {
    let n = cfg.game.n_players;
    let blocks = cfg.rounds.div_ceil(BLOCK_ROUNDS);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(cfg, b))
        .reduce(|| Counts::zero(n), Counts::merge);
    GainEstimate::from_counts(&cfg.game, cfg.rounds, counts.wins, counts.eliminations)
}

/// Empirical response curve of player 0 with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalResponse {
    pub curve: ResponseCurve,
    pub gain_std_error: Vec<f64>,
    pub rounds_per_point: u64,
}

/// Seed of grid point `index` in a sweep seeded with `seed`.
fn point_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 increment decorrelates neighbouring points
    seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// For each `x` in `x_grid`, pins player 0 to the pure choice `x` while the
/// others play `f`, and estimates player 0's win probability and gain.
pub fn deviation_sweep(
    cfg: &GameConfig,
    f: &MixedStrategy,
    x_grid: &[f64],
    rounds_per_point: u64,
) -> Result<EmpiricalResponse> {
    let mut win_prob = Vec::with_capacity(x_grid.len());
    let mut gain = Vec::with_capacity(x_grid.len());
    let mut gain_std_error = Vec::with_capacity(x_grid.len());
    for (i, &x) in x_grid.iter().enumerate() {
        check_unit("x", x)?;
        let mut strategies = vec![f.clone(); cfg.n_players];
        strategies[0] = MixedStrategy::pure_atom(x)?;
        let game = GameConfig::new(cfg.n_players, point_seed(cfg.seed, i))?;
        let est = run_tournament(&TournamentConfig::new(game, rounds_per_point, strategies)?);
        win_prob.push(est.win_frequency(0));
        gain.push(est.mean_gain[0]);
        gain_std_error.push(est.std_error[0]);
    }
    Ok(EmpiricalResponse {
        curve: ResponseCurve {
            n_players: cfg.n_players,
            x_values: x_grid.to_vec(),
            win_prob,
            gain,
        },
        gain_std_error,
        rounds_per_point,
    })
}
