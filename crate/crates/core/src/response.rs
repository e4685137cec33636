//! Expected gain of a single deviating player against opponents who all use
//! the same mixed strategy.
//!
//! With opponents drawing from `f`, a player choosing `x` wins with
//! probability `(1-x) U(x)^(N-1) + x V^(N-1) / N`, where
//! `U(x) = ∫₀ˣ (1-s) f(s) ds + V` and `V = ∫₀¹ s f(s) ds`.

use rand::Rng;
use serde::Serialize;

use crate::analytic::NashEquilibrium;
use crate::engine::GameConfig;
use crate::error::{check_unit, Error, Result};
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};

/// Allowed deviation of a strategy's total mass from 1.
pub const MASS_TOL: f64 = 1e-9;

/// Largest |gain| on the support accepted as indifference.
pub const INDIFFERENCE_TOL: f64 = 1e-5;

/// Relative distance kept from the support edge when checking indifference.
pub const EDGE_EXCLUSION: f64 = 1e-9;

// Per-segment tolerance for cumulative U tables.
const SEGMENT_ABS_TOL: f64 = 1e-13;

/// Piecewise-linear density given by its values on a sorted grid; zero
/// outside the grid. Integrals use the trapezoid rule on the grid itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    // cumulative trapezoid mass at each node
    cumulative: Vec<f64>,
}

impl GridDensity {
    fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "grid density needs matching grid and values of length ≥ 2, got {} and {}",
                grid.len(),
                values.len()
            )));
        }
        for &x in &grid {
            check_unit("grid point", x)?;
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "grid points must be strictly increasing".into(),
            ));
        }
        if let Some(&v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain {
                name: "density value",
                value: v,
                domain: "[0, inf)",
            });
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 1..grid.len() {
            acc += 0.5 * (grid[k] - grid[k - 1]) * (values[k] + values[k - 1]);
            cumulative.push(acc);
        }
        Ok(GridDensity {
            grid,
            values,
            cumulative,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        *self.cumulative.last().expect("grid has ≥ 2 points")
    }

    /// Trapezoid integral of `w(s) f(s)` over the grid cut at `upper`.
    fn weighted_integral(&self, w: impl Fn(f64) -> f64, upper: f64) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for k in 1..g.len() {
            let (lo, hi) = (g[k - 1], g[k]);
            if lo >= upper {
                break;
            }
            let glo = w(lo) * self.values[k - 1];
            let ghi = w(hi) * self.values[k];
            if hi <= upper {
                acc += 0.5 * (hi - lo) * (glo + ghi);
            } else {
                let t = (upper - lo) / (hi - lo);
                let gup = glo + t * (ghi - glo);
                acc += 0.5 * (upper - lo) * (glo + gup);
            }
        }
        acc
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let r = rng.random::<f64>() * self.mass();
        let k = self
            .cumulative
            .partition_point(|&c| c <= r)
            .clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        let (f0, f1) = (self.values[k - 1], self.values[k]);
        let h = x1 - x0;
        let rem = (r - self.cumulative[k - 1]).max(0.0);
        // Solve f0 τ + (f1 - f0) τ² / (2h) = rem in the stable form.
        let disc = (f0 * f0 + 2.0 * (f1 - f0) * rem / h).max(0.0);
        let denom = f0 + disc.sqrt();
        let tau = if denom > 0.0 { 2.0 * rem / denom } else { 0.0 };
        (x0 + tau.clamp(0.0, h)).min(x1)
    }
}

/// A strategy of the opponents: a probability distribution on `[0, 1]`.
#[derive(Debug, Clone)]
pub enum MixedStrategy {
    AnalyticNash(NashEquilibrium),
    PureAtom(f64),
    GridDensity(GridDensity),
}

impl MixedStrategy {
    pub fn analytic_nash(n_players: usize) -> Result<Self> {
        Ok(MixedStrategy::AnalyticNash(NashEquilibrium::new(
            n_players,
        )?))
    }

    pub fn pure_atom(x: f64) -> Result<Self> {
        check_unit("atom", x)?;
        Ok(MixedStrategy::PureAtom(x))
    }

    /// Piecewise-linear density from values on a grid; mass must be 1.
    pub fn grid_density(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let g = GridDensity::new(grid, values)?;
        if (g.mass() - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!(
                "grid density has total mass {} (must be 1 within {MASS_TOL:e})",
                g.mass()
            )));
        }
        Ok(MixedStrategy::GridDensity(g))
    }

    /// Like [`Self::grid_density`] but accepts any total mass. Used to probe
    /// failure paths of [`verify_equilibrium`] with non-strategies.
    pub fn grid_density_unnormalized(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(MixedStrategy::GridDensity(GridDensity::new(grid, values)?))
    }

    pub fn total_mass(&self) -> Result<f64> {
        match self {
            MixedStrategy::AnalyticNash(eq) => eq.cdf_quadrature(1.0),
            MixedStrategy::PureAtom(_) => Ok(1.0),
            MixedStrategy::GridDensity(g) => Ok(g.mass()),
        }
    }

    /// `V = ∫ s f(s) ds`.
    pub fn v_functional(&self) -> Result<f64> {
        match self {
            MixedStrategy::AnalyticNash(eq) => eq.first_moment_quadrature(),
            MixedStrategy::PureAtom(x) => Ok(*x),
            MixedStrategy::GridDensity(g) => Ok(g.weighted_integral(|s| s, 1.0)),
        }
    }

    /// `U(x) = ∫₀ˣ (1-s) f(s) ds + V`. An atom at `X` counts as below `x`
    /// only when `X < x`.
    pub fn u_functional(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        let v = self.v_functional()?;
        Ok(self.lower_survival(x)? + v)
    }

    /// `∫₀ˣ (1-s) f(s) ds`.
    fn lower_survival(&self, x: f64) -> Result<f64> {
        Ok(match self {
            MixedStrategy::AnalyticNash(eq) => {
                let upper = x.min(eq.support_edge);
                integrate(
                    |s| (1.0 - s) * eq.density_unchecked(s),
                    0.0,
                    upper,
                    DEFAULT_ABS_TOL,
                )?
                .value
            }
            MixedStrategy::PureAtom(atom) => {
                if *atom < x {
                    1.0 - atom
                } else {
                    0.0
                }
            }
            MixedStrategy::GridDensity(g) => g.weighted_integral(|s| 1.0 - s, x),
        })
    }

    /// `U` at every point of a nondecreasing grid, accumulated segment by
    /// segment so the cost is linear in the grid size.
    pub fn u_curve(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("grid must be nondecreasing".into()));
        }
        for &x in xs {
            check_unit("x", x)?;
        }
        let v = self.v_functional()?;
        match self {
            MixedStrategy::AnalyticNash(eq) => {
                let a = eq.support_edge;
                let mut out = Vec::with_capacity(xs.len());
                let mut prev = 0.0;
                let mut acc = 0.0;
                for &x in xs {
                    let upper = x.min(a);
                    if upper > prev {
                        acc += integrate(
                            |s| (1.0 - s) * eq.density_unchecked(s),
                            prev,
                            upper,
                            SEGMENT_ABS_TOL,
                        )?
                        .value;
                        prev = upper;
                    }
                    out.push(acc + v);
                }
                Ok(out)
            }
            _ => xs
                .iter()
                .map(|&x| Ok(self.lower_survival(x)? + v))
                .collect(),
        }
    }

    /// Largest point carrying mass.
    pub fn support_max(&self) -> f64 {
        match self {
            MixedStrategy::AnalyticNash(eq) => eq.support_edge,
            MixedStrategy::PureAtom(x) => *x,
            MixedStrategy::GridDensity(g) => g
                .grid
                .iter()
                .zip(&g.values)
                .rev()
                .find(|(_, &v)| v > 0.0)
                .map_or(0.0, |(&x, _)| x),
        }
    }

    /// Draws one choice from the strategy.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MixedStrategy::AnalyticNash(eq) => eq.sample(rng),
            MixedStrategy::PureAtom(x) => *x,
            MixedStrategy::GridDensity(g) => g.sample(rng),
        }
    }
}

fn win_prob_from(n: f64, x: f64, u: f64, v: f64) -> f64 {
    let m = n as i32 - 1;
    (1.0 - x) * u.powi(m) + x * v.powi(m) / n
}

/// Win probability of a player choosing `x` against `N-1` opponents on `f`.
pub fn expected_win_prob(cfg: &GameConfig, f: &MixedStrategy, x: f64) -> Result<f64> {
    check_unit("x", x)?;
    let v = f.v_functional()?;
    let u = f.lower_survival(x)? + v;
    Ok(win_prob_from(cfg.n(), x, u, v))
}

/// Expected gain `N P̄ - 1`.
pub fn expected_gain(cfg: &GameConfig, f: &MixedStrategy, x: f64) -> Result<f64> {
    Ok(cfg.n() * expected_win_prob(cfg, f, x)? - 1.0)
}

/// Expected win probability and gain on a grid of pure deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseCurve {
    pub n_players: usize,
    pub x_values: Vec<f64>,
    pub win_prob: Vec<f64>,
    pub gain: Vec<f64>,
}

impl ResponseCurve {
    /// Builds the curve from a nondecreasing grid.
    pub fn evaluate(cfg: &GameConfig, f: &MixedStrategy, x_values: Vec<f64>) -> Result<Self> {
        let v = f.v_functional()?;
        let u = f.u_curve(&x_values)?;
        let n = cfg.n();
        let win_prob: Vec<f64> = x_values
            .iter()
            .zip(&u)
            .map(|(&x, &ux)| win_prob_from(n, x, ux, v))
            .collect();
        let gain = win_prob.iter().map(|p| n * p - 1.0).collect();
        Ok(ResponseCurve {
            n_players: cfg.n_players,
            x_values,
            win_prob,
            gain,
        })
    }

    /// Index of the largest gain; ties go to the smallest `x`.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &g) in self.gain.iter().enumerate() {
            if g > self.gain[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub curve: ResponseCurve,
    pub argmax: f64,
    pub max_gain: f64,
}

fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / last
            }
        })
        .collect()
}

/// Scans pure deviations on a uniform grid of `grid_size` points in `[0, 1]`.
pub fn best_response_scan(
    cfg: &GameConfig,
    f: &MixedStrategy,
    grid_size: usize,
) -> Result<BestResponse> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 2, got {grid_size}"
        )));
    }
    let curve = ResponseCurve::evaluate(cfg, f, uniform_grid(0.0, 1.0, grid_size))?;
    let i = curve.argmax();
    Ok(BestResponse {
        argmax: curve.x_values[i],
        max_gain: curve.gain[i],
        curve,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub n_players: usize,
    pub support_edge: f64,
    pub grid_size: usize,
    pub total_mass: f64,
    /// sup of |gain| over the support grid.
    pub max_indifference_violation: f64,
    /// sup of gain over the grid in `(support_edge, 1]`; `None` when empty.
    pub max_out_of_support_gain: Option<f64>,
    /// Mean gain over the support grid.
    pub nash_value: f64,
    pub passed: bool,
}

/// Checks indifference on `[0, support_edge)` and a strict deficit on
/// `(support_edge, 1]`, each on `grid_size` points.
pub fn verify_equilibrium(
    cfg: &GameConfig,
    f: &MixedStrategy,
    support_edge: f64,
    grid_size: usize,
) -> Result<EquilibriumReport> {
    if grid_size < 16 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be at least 16, got {grid_size}"
        )));
    }
    check_unit("support_edge", support_edge)?;
    let inside = ResponseCurve::evaluate(
        cfg,
        f,
        uniform_grid(0.0, support_edge * (1.0 - EDGE_EXCLUSION), grid_size),
    )?;
    let outside_grid: Vec<f64> = if support_edge < 1.0 {
        (1..=grid_size)
            .map(|k| {
                if k == grid_size {
                    1.0
                } else {
                    support_edge + (1.0 - support_edge) * k as f64 / grid_size as f64
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let outside = ResponseCurve::evaluate(cfg, f, outside_grid)?;

    let max_indifference_violation = inside.gain.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let max_out_of_support_gain = outside.gain.iter().copied().reduce(f64::max);
    let nash_value = inside.gain.iter().sum::<f64>() / inside.gain.len() as f64;
    let total_mass = f.total_mass()?;
    let passed = (total_mass - 1.0).abs() <= MASS_TOL
        && max_indifference_violation <= INDIFFERENCE_TOL
        && max_out_of_support_gain.is_none_or(|g| g < 0.0);
    Ok(EquilibriumReport {
        n_players: cfg.n_players,
        support_edge,
        grid_size,
        total_mass,
        max_indifference_violation,
        max_out_of_support_gain,
        nash_value,
        passed,
    })
}

/// Residual of the once-differentiated indifference condition,
/// `|-U^(N-1) + (N-1)(1-x)² f U^(N-2) + V^(N-1)/N|`, with `U` and `V` from
/// quadrature.
pub fn first_derivative_residual(eq: &NashEquilibrium, x: f64) -> Result<f64> {
    let f = MixedStrategy::AnalyticNash(eq.clone());
    let u = f.u_functional(x)?;
    let v = f.v_functional()?;
    let n = eq.n_players as f64;
    let m = eq.n_players as i32 - 1;
    let dens = eq.density(x)?;
    let y = 1.0 - x;
    Ok((-u.powi(m) + (n - 1.0) * y * y * dens * u.powi(m - 1) + v.powi(m) / n).abs())
}

/// Residual of the twice-differentiated condition,
/// `|(-3f + (1-x) f') U + (N-2)(1-x)² f²|`, with a five-point `f'`.
pub fn second_derivative_residual(eq: &NashEquilibrium, x: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || x - 2.0 * h < 0.0 || x + 2.0 * h > eq.support_edge {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "stencil [x-2h, x+2h] inside [0, a]",
        });
    }
    let f = |s: f64| eq.density_unchecked(s);
    let d1 = (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h);
    let u = MixedStrategy::AnalyticNash(eq.clone()).u_functional(x)?;
    let y = 1.0 - x;
    let f0 = f(x);
    Ok(((-3.0 * f0 + y * d1) * u + (eq.n_players as f64 - 2.0) * y * y * f0 * f0).abs())
}
