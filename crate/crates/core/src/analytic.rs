//! Closed-form symmetric Nash equilibrium of the N-player elimination game.
//!
//! For `N ≥ 2` players the equilibrium density is
//!
//! ```text
//! f*(x) = 1 / [ N^(2-2b) (1-x)^(3-b) (N-x)^b ]   for 0 ≤ x ≤ a,
//!       = 0                                      for a < x ≤ 1,
//! ```
//!
//! with `b = (N-2)/(N-1)` and support edge `a = N/(N+1)`. Writing
//! `t = (N-x)/(1-x)` the CDF integrates to the elementary expression
//! `F(x) = C x t^(1/(N-1)) / (N (1-x))`, which is what [`NashEquilibrium::cdf`]
//! evaluates. [`NashEquilibrium::cdf_quadrature`] integrates the density
//! numerically and is kept as an independent route to the same numbers.

use rand::Rng;
use serde::Serialize;

use crate::error::{check_unit, Error, Result};
use crate::quadrature::{integrate, DEFAULT_ABS_TOL};

/// Number of nodes in the cached CDF table used to bracket quantiles.
pub const CDF_TABLE_SIZE: usize = 1024;

/// Absolute x-tolerance of [`NashEquilibrium::quantile`].
pub const QUANTILE_TOL: f64 = 1e-12;

/// Default finite-difference step of [`NashEquilibrium::ode_residual`].
pub const DEFAULT_ODE_STEP: f64 = 1e-4;

/// The analytic equilibrium family for a given number of players.
///
/// Immutable after construction; cheap to clone and safe to share across
/// threads.
#[derive(Debug, Clone, Serialize)]
pub struct NashEquilibrium {
    pub n_players: usize,
    /// Exponent `(N-2)/(N-1)`.
    pub b: f64,
    /// Integration constant `B = N - 1`.
    pub big_b: f64,
    /// Normalization `C = N^(-2/(N-1))`.
    pub c_norm: f64,
    /// Right end `a = N/(N+1)` of the support `[0, a]`.
    pub support_edge: f64,
    /// Equilibrium elimination probability `V* = N^(-1/(N-1))`.
    pub v_star: f64,
    #[serde(skip)]
    n_pow: f64,
    #[serde(skip)]
    inv_nm1: f64,
    #[serde(skip)]
    cdf_table: Vec<f64>,
}

impl NashEquilibrium {
    pub fn new(n_players: usize) -> Result<Self> {
        if n_players < 2 {
            return Err(Error::InvalidArgument(format!(
                "the game needs at least 2 players, got {n_players}"
            )));
        }
        let n = n_players as f64;
        let nm1 = n - 1.0;
        let b = (n - 2.0) / nm1;
        let mut eq = NashEquilibrium {
            n_players,
            b,
            big_b: nm1,
            c_norm: n.powf(-2.0 / nm1),
            support_edge: n / (n + 1.0),
            v_star: n.powf(-1.0 / nm1),
            n_pow: n.powf(2.0 - 2.0 * b),
            inv_nm1: 1.0 / nm1,
            cdf_table: Vec::new(),
        };
        let a = eq.support_edge;
        eq.cdf_table = (0..=CDF_TABLE_SIZE)
            .map(|k| eq.cdf_closed(a * k as f64 / CDF_TABLE_SIZE as f64))
            .collect();
        Ok(eq)
    }

    fn n(&self) -> f64 {
        self.n_players as f64
    }

    /// Density on the closed support, no domain check.
    pub(crate) fn density_unchecked(&self, x: f64) -> f64 {
        if x > self.support_edge {
            return 0.0;
        }
        // (1-x)^(3-b) is split as (1-x)^3 (1-x)^(-b) so that N = 2 reduces
        // bit-for-bit to 1 / (4 (1-x)^3).
        let y = 1.0 - x;
        1.0 / (self.n_pow * y.powi(3) * y.powf(-self.b) * (self.n() - x).powf(self.b))
    }

    /// Equilibrium density `f*(x)`; zero above the support edge.
    pub fn density(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.density_unchecked(x))
    }

    /// Closed-form `U*(x)`; equals 1 for `x ≥ a`.
    pub fn u_star(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        let a = self.support_edge;
        if x >= a {
            return Ok(1.0);
        }
        let n = self.n();
        Ok((((1.0 - a) * (n - x)) / ((1.0 - x) * (n - a))).powf(self.inv_nm1))
    }

    /// Returns `(F(x), f(x))` for `0 ≤ x < a` sharing one power evaluation.
    fn cdf_and_density(&self, x: f64) -> (f64, f64) {
        let n = self.n();
        let y = 1.0 - x;
        let t = (n - x) / y;
        let s = t.powf(self.inv_nm1);
        let cdf = self.c_norm * x * s / (n * y);
        let dens = self.c_norm * s / (y * y * y * t);
        (cdf, dens)
    }

    fn cdf_closed(&self, x: f64) -> f64 {
        if x >= self.support_edge {
            1.0
        } else {
            self.cdf_and_density(x).0
        }
    }

    /// Equilibrium CDF, clamped to 1 on `[a, 1]`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.cdf_closed(x))
    }

    /// CDF by adaptive Gauss–Kronrod integration of [`Self::density`] to
    /// absolute tolerance 1e-10.
    pub fn cdf_quadrature(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        let upper = x.min(self.support_edge);
        Ok(integrate(|s| self.density_unchecked(s), 0.0, upper, DEFAULT_ABS_TOL)?.value)
    }

    /// `∫ x f*(x) dx` by quadrature; equals `V*` analytically.
    pub fn first_moment_quadrature(&self) -> Result<f64> {
        Ok(integrate(
            |s| s * self.density_unchecked(s),
            0.0,
            self.support_edge,
            DEFAULT_ABS_TOL,
        )?
        .value)
    }

    /// Inverse CDF on `[0, a]`.
    ///
    /// The cached table brackets `u` in O(log K); safeguarded Newton steps
    /// then refine to [`QUANTILE_TOL`], falling back to bisection whenever a
    /// step leaves the bracket.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_unit("u", u)?;
        Ok(self.quantile_unchecked(u))
    }

    fn quantile_unchecked(&self, u: f64) -> f64 {
        let a = self.support_edge;
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return a;
        }
        let table = &self.cdf_table;
        // First node with F > u; u > 0 = table[0] so k ≥ 1.
        let k = table.partition_point(|&f| f <= u).clamp(1, CDF_TABLE_SIZE);
        let step = a / CDF_TABLE_SIZE as f64;
        let mut lo = step * (k - 1) as f64;
        let mut hi = if k == CDF_TABLE_SIZE {
            a
        } else {
            step * k as f64
        };
        let (f_lo, f_hi) = (table[k - 1], table[k]);
        let mut x = if f_hi > f_lo {
            lo + (hi - lo) * (u - f_lo) / (f_hi - f_lo)
        } else {
            0.5 * (lo + hi)
        };

        for _ in 0..200 {
            let (cdf, dens) = self.cdf_and_density(x);
            let diff = cdf - u;
            if diff == 0.0 {
                return x;
            }
            if diff > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - diff / dens;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= QUANTILE_TOL || hi - lo <= QUANTILE_TOL {
                return next;
            }
            x = next;
        }
        x
    }

    /// Draws one strategy value by inverse-transform sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile_unchecked(rng.random::<f64>())
    }

    /// Average elimination probability `⟨x⟩`, equal to `V*`.
    pub fn mean_elimination_fraction(&self) -> f64 {
        self.v_star
    }

    /// `N⁻¹ f*(a + ξ/N)`, the density on the scaling variable `ξ = (x-a)N`.
    /// `None` when `a + ξ/N` falls below 0.
    pub fn rescaled_density(&self, xi: f64) -> Option<f64> {
        let n = self.n();
        let x = self.support_edge + xi / n;
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        Some(self.density_unchecked(x) / n)
    }

    /// Residual of the second-order ODE satisfied by the equilibrium density,
    /// evaluated with five-point central differences of step `h`.
    pub fn ode_residual(&self, x: f64, h: f64) -> Result<f64> {
        if !(h > 0.0) || x - 2.0 * h <= 0.0 || x + 2.0 * h >= self.support_edge {
            return Err(Error::Domain {
                name: "x",
                value: x,
                domain: "stencil [x-2h, x+2h] inside (0, a)",
            });
        }
        Ok(ode_residual_of(
            self.n_players,
            |s| self.density_unchecked(s),
            x,
            h,
        ))
    }
}

/// Residual of the equilibrium ODE for an arbitrary density `f`:
///
/// `|(1-x) f - (N-2) d/dx[(1-x)² f² / (3f - (1-x) f')]|` for `N > 2`, and the
/// linear first-order form `|-3f + (1-x) f'|` for `N = 2`, where the nonlinear
/// term carries a zero prefactor.
///
/// The derivative of the bracket is expanded analytically so that only `f'`
/// and `f''` need stencils, both on the points `x ± h`, `x ± 2h`.
pub fn ode_residual_of<F: Fn(f64) -> f64>(n_players: usize, f: F, x: f64, h: f64) -> f64 {
    let (fm2, fm1, f0, fp1, fp2) = (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    let y = 1.0 - x;
    if n_players == 2 {
        return (-3.0 * f0 + y * d1).abs();
    }
    let num = y * y * f0 * f0;
    let num_d = -2.0 * y * f0 * f0 + 2.0 * y * y * f0 * d1;
    let den = 3.0 * f0 - y * d1;
    let den_d = 4.0 * d1 - y * d2;
    let bracket_d = (num_d * den - num * den_d) / (den * den);
    (y * f0 - (n_players as f64 - 2.0) * bracket_d).abs()
}

/// Large-`N` limit of the rescaled equilibrium density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingProfile {
    pub xi: f64,
    pub density: f64,
}

impl ScalingProfile {
    pub fn at(xi: f64) -> Result<Self> {
        Ok(ScalingProfile {
            xi,
            density: scaling_density(xi)?,
        })
    }
}

/// `1/(1-ξ)²` on `ξ ≤ 0`.
pub fn scaling_density(xi: f64) -> Result<f64> {
    if xi > 0.0 || xi.is_nan() {
        return Err(Error::Domain {
            name: "xi",
            value: xi,
            domain: "(-inf, 0]",
        });
    }
    let d = 1.0 - xi;
    Ok(1.0 / (d * d))
}
