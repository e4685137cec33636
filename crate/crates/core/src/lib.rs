//! Numerical toolkit for the symmetric N-player elimination game.
//!
//! Each of `N` players picks `x` in `[0, 1]`, is eliminated with probability
//! `x`, and the surviving player with the largest `x` takes the pot. The
//! crate provides:
//!
//! * [`analytic`]: the closed-form symmetric mixed Nash equilibrium, its CDF,
//!   quantile function, sampler and large-`N` scaling profile;
//! * [`engine`]: exact single-round win probabilities and payoffs, a
//!   brute-force oracle, and stochastic play of a round;
//! * [`response`]: expected gain of a unilateral deviator against a common
//!   opponent strategy, best-response scans and equilibrium verification;
//! * [`solver`]: damped fictitious play on a binned strategy space;
//! * [`montecarlo`]: reproducible tournament simulation.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod engine;
mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod response;
pub mod solver;

pub use analytic::{NashEquilibrium, ScalingProfile};
pub use engine::{GameConfig, RoundOutcome, StrategyProfile};
pub use error::{Error, Result};
pub use montecarlo::EmpiricalResponse;
pub use montecarlo::{GainEstimate, TournamentConfig};
pub use response::{EquilibriumReport, MixedStrategy, ResponseCurve};
pub use solver::{DiscreteStrategy, SolverOptions, SolverReport};
