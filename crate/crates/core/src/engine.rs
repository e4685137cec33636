//! Rules of a single round: exact win probabilities for pure strategy
//! profiles and stochastic play.
//!
//! Player indices are zero-based throughout; "player 1" of the usual
//! notation is index 0.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Largest game the exponential oracle will enumerate.
pub const ORACLE_MAX_PLAYERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n_players: usize,
    pub seed: u64,
}

impl GameConfig {
    pub fn new(n_players: usize, seed: u64) -> Result<Self> {
        if n_players < 2 {
            return Err(Error::InvalidArgument(format!(
                "the game needs at least 2 players, got {n_players}"
            )));
        }
        Ok(GameConfig { n_players, seed })
    }

    pub(crate) fn n(&self) -> f64 {
        self.n_players as f64
    }
}

/// One pure choice per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    choices: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(choices: Vec<f64>) -> Result<Self> {
        for &x in &choices {
            check_unit("choice", x)?;
        }
        Ok(StrategyProfile { choices })
    }

    pub fn choices(&self) -> &[f64] {
        &self.choices
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Same profile with `player` moved to the front, so that the player's
    /// quantities can be evaluated with the formulas written for index 0.
    pub fn with_player_first(&self, player: usize) -> StrategyProfile {
        let mut choices = self.choices.clone();
        choices.swap(0, player);
        StrategyProfile { choices }
    }

    fn check_len(&self, cfg: &GameConfig) -> Result<()> {
        if self.choices.len() != cfg.n_players {
            return Err(Error::InvalidArgument(format!(
                "profile has {} entries for a {}-player game",
                self.choices.len(),
                cfg.n_players
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub eliminated: Vec<bool>,
    pub winner: usize,
    pub payoffs: Vec<f64>,
}

/// Plays one round: every player is eliminated independently with
/// probability equal to their choice; the largest surviving choice wins,
/// ties and the all-eliminated case are decided uniformly at random.
pub fn play_round<R: Rng + ?Sized>(
    cfg: &GameConfig,
    profile: &StrategyProfile,
    rng: &mut R,
) -> Result<RoundOutcome> {
    profile.check_len(cfg)?;
    let mut eliminated = vec![false; cfg.n_players];
    let winner = resolve_round(profile.choices(), rng, &mut eliminated);
    let n = cfg.n();
    let payoffs = (0..cfg.n_players)
        .map(|j| if j == winner { n - 1.0 } else { -1.0 })
        .collect();
    Ok(RoundOutcome {
        eliminated,
        winner,
        payoffs,
    })
}

/// Allocation-free core of [`play_round`]; fills `eliminated` and returns the
/// winner index.
pub(crate) fn resolve_round<R: Rng + ?Sized>(
    choices: &[f64],
    rng: &mut R,
    eliminated: &mut [bool],
) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut tied = 0usize;
    for (&x, out) in choices.iter().zip(eliminated.iter_mut()) {
        *out = rng.random::<f64>() < x;
        if !*out {
            if x > best {
                best = x;
                tied = 1;
            } else if x == best {
                tied += 1;
            }
        }
    }
    if tied == 0 {
        return rng.random_range(0..choices.len());
    }
    let mut pick = if tied == 1 {
        0
    } else {
        rng.random_range(0..tied)
    };
    for (j, (&x, &out)) in choices.iter().zip(eliminated.iter()).enumerate() {
        if !out && x == best {
            if pick == 0 {
                return j;
            }
            pick -= 1;
        }
    }
    unreachable!("tied survivor count is consistent")
}

fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Probability that player 0 wins, in the factorized O(N) form
///
/// `(1-x₁) ∏_{j≥2} [x_j + (1-x_j) θ(x₁-x_j)] + x₁ ∏_{j≥2} x_j / N`.
///
/// Valid only when player 0's choice differs from every opponent's; ties
/// return [`Error::DegenerateTie`].
pub fn win_probability_exact(cfg: &GameConfig, profile: &StrategyProfile) -> Result<f64> {
    profile.check_len(cfg)?;
    let (&x1, rest) = profile
        .choices()
        .split_first()
        .expect("length checked against n_players ≥ 2");
    if let Some(other) = rest.iter().position(|&xj| xj == x1) {
        return Err(Error::DegenerateTie {
            x: x1,
            other: other + 1,
        });
    }
    let (survive, all_out) = rest.iter().fold((1.0, 1.0), |(s, e), &xj| {
        (s * (xj + (1.0 - xj) * step(x1 - xj)), e * xj)
    });
    Ok((1.0 - x1) * survive + x1 * all_out / cfg.n())
}

/// Expected payoff `N P - 1` of `player`.
pub fn payoff_exact(cfg: &GameConfig, profile: &StrategyProfile, player: usize) -> Result<f64> {
    if player >= profile.len() {
        return Err(Error::InvalidArgument(format!(
            "player index {player} out of range for {} players",
            profile.len()
        )));
    }
    let p = win_probability_exact(cfg, &profile.with_player_first(player))?;
    Ok(cfg.n() * p - 1.0)
}

/// Two-player payoff of player 1 written piecewise.
pub fn payoff_n2_closed_form(x1: f64, x2: f64) -> Result<f64> {
    check_unit("x1", x1)?;
    check_unit("x2", x2)?;
    if x1 < x2 {
        Ok(-1.0 + 2.0 * x2 - x1 * x2)
    } else if x1 > x2 {
        Ok(1.0 - 2.0 * x1 + x1 * x2)
    } else {
        Err(Error::DegenerateTie { x: x1, other: 1 })
    }
}

/// Brute-force win probability of player 0.
///
/// Nondegenerate profiles use the literal sum over subsets of surviving
/// opponents; profiles with ties enumerate all `2^N` elimination patterns and
/// split each pattern's probability among tied winners.
pub fn win_probability_oracle(cfg: &GameConfig, profile: &StrategyProfile) -> Result<f64> {
    profile.check_len(cfg)?;
    if cfg.n_players > ORACLE_MAX_PLAYERS {
        return Err(Error::TooLarge {
            what: "oracle game",
            size: cfg.n_players,
            limit: ORACLE_MAX_PLAYERS,
        });
    }
    let choices = profile.choices();
    let x1 = choices[0];
    if choices[1..].contains(&x1) {
        Ok(enumerate_outcomes(choices))
    } else {
        Ok(subset_sum(choices))
    }
}

/// Sum over subsets `J` of opponents that survive below player 0.
fn subset_sum(choices: &[f64]) -> f64 {
    let x1 = choices[0];
    let opponents = &choices[1..];
    let m = opponents.len();
    let mut survive = 0.0;
    for mask in 0u32..(1u32 << m) {
        let mut term = 1.0;
        for (j, &xj) in opponents.iter().enumerate() {
            if mask >> j & 1 == 1 {
                term *= (1.0 - xj) * step(x1 - xj);
            } else {
                term *= xj;
            }
        }
        survive += term;
    }
    let all_out: f64 = opponents.iter().product();
    (1.0 - x1) * survive + x1 * all_out / choices.len() as f64
}

/// Enumerates all elimination patterns, resolving ties literally.
fn enumerate_outcomes(choices: &[f64]) -> f64 {
    let n = choices.len();
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        // bit set = eliminated
        let mut prob = 1.0;
        for (j, &x) in choices.iter().enumerate() {
            prob *= if mask >> j & 1 == 1 { x } else { 1.0 - x };
        }
        if prob == 0.0 {
            continue;
        }
        if mask == (1u32 << n) - 1 {
            total += prob / n as f64;
            continue;
        }
        if mask & 1 == 1 {
            continue;
        }
        let best = (0..n)
            .filter(|&j| mask >> j & 1 == 0)
            .map(|j| choices[j])
            .fold(f64::NEG_INFINITY, f64::max);
        if choices[0] == best {
            let tied = (0..n)
                .filter(|&j| mask >> j & 1 == 0 && choices[j] == best)
                .count();
            total += prob / tied as f64;
        }
    }
    total
}
