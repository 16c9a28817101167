//! Validated domain types shared by every other module, plus the analytic
//! wealth representation used by both the simulator and the tests.
//!
//! Times are calendar years throughout; trading-day conventions live only in
//! [`crate::estimation`]. All types are immutable after construction and all
//! operations are pure, so everything here is safe to share across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `gamma` values within this distance of 1 are classified as log utility.
pub const GAMMA_LOG_TOLERANCE: f64 = 1e-12;

/// Market model parameters: the `(mu, sigma, r, lambda)` tuple everything
/// consumes.
///
/// * `mu` — annualized drift (1/year)
/// * `sigma` — annualized volatility (1/sqrt(year)), strictly positive
/// * `r` — annualized risk-free rate (1/year), nonnegative
/// * `lambda` — default intensity (1/year), nonnegative; `P{tau > t} = exp(-lambda t)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
    pub lambda: f64,
}

impl MarketParams {
    pub fn new(mu: f64, sigma: f64, r: f64, lambda: f64) -> Result<Self> {
        for (name, v) in [("mu", mu), ("sigma", sigma), ("r", r), ("lambda", lambda)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
            }
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        if r < 0.0 {
            return Err(Error::InvalidParameter(format!("r must be >= 0, got {r}")));
        }
        if lambda < 0.0 {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(Self { mu, sigma, r, lambda })
    }

    /// `sigma^2`, the instantaneous variance.
    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }

    /// Excess return `mu - r` of stock over cash.
    pub fn excess_return(&self) -> f64 {
        self.mu - self.r
    }
}

/// Which branch of the isoelastic family a `gamma` falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UtilityKind {
    /// `gamma = 1`: `U(w) = log(w)`.
    Log,
    /// `gamma != 1`: `U(w) = (w^{1-gamma} - 1) / (1 - gamma)`.
    Power,
}

/// Relative risk aversion with the log/power branch resolved once at
/// construction (`|gamma - 1| <= 1e-12` classifies as log).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    gamma: f64,
    kind: UtilityKind,
}

impl UtilitySpec {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma must be a finite positive number, got {gamma}"
            )));
        }
        let kind = if (gamma - 1.0).abs() <= GAMMA_LOG_TOLERANCE {
            UtilityKind::Log
        } else {
            UtilityKind::Power
        };
        Ok(Self { gamma, kind })
    }

    /// Log utility, `gamma = 1`.
    pub fn log() -> Self {
        Self { gamma: 1.0, kind: UtilityKind::Log }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kind(&self) -> UtilityKind {
        self.kind
    }

    /// Isoelastic utility of wealth `w > 0`.
    ///
    /// Uses the normalized form `(w^{1-gamma} - 1)/(1-gamma)` so the
    /// `gamma -> 1` limit is continuous and equals `log(w)`. Note that
    /// [`crate::power_policy`] internally drops the `-1/(1-gamma)` constant;
    /// the two conventions differ by exactly that additive offset.
    pub fn utility(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::Domain(format!(
                "utility requires wealth > 0, got {w} (utility is -infinity; inadmissible)"
            )));
        }
        Ok(match self.kind {
            UtilityKind::Log => w.ln(),
            // expm1 keeps the value accurate when gamma is close to 1.
            UtilityKind::Power => {
                let one_minus_gamma = 1.0 - self.gamma;
                f64::exp_m1(one_minus_gamma * w.ln()) / one_minus_gamma
            }
        })
    }
}

/// Investment horizon: maturity `T > 0` in years and a positive grid count
/// for discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    maturity: f64,
    n_steps: usize,
}

impl Horizon {
    pub fn new(maturity: f64, n_steps: usize) -> Result<Self> {
        if !maturity.is_finite() || maturity <= 0.0 {
            return Err(Error::InvalidParameter(format!("maturity must be > 0, got {maturity}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be >= 1".into()));
        }
        Ok(Self { maturity, n_steps })
    }

    /// Horizon with the default integration grid: `max(1000, ceil(1000 T))`
    /// steps, i.e. a step never coarser than about 1e-3 years.
    pub fn with_default_steps(maturity: f64) -> Result<Self> {
        if !maturity.is_finite() || maturity <= 0.0 {
            return Err(Error::InvalidParameter(format!("maturity must be > 0, got {maturity}")));
        }
        let n = (1000.0 * maturity).ceil().max(1000.0) as usize;
        Self::new(maturity, n)
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Grid step `T / n_steps`.
    pub fn dt(&self) -> f64 {
        self.maturity / self.n_steps as f64
    }

    /// The uniform grid `0 = t_0 < ... < t_n = T` with `n_steps + 1` nodes.
    /// The last node is pinned to `T` exactly.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_steps;
        let mut times: Vec<f64> = (0..=n).map(|k| self.maturity * k as f64 / n as f64).collect();
        times[n] = self.maturity;
        times
    }
}

/// A pre-default allocation path on a time grid, with the absorbing
/// post-default weight pinned to 0.
///
/// Invariants: times strictly ascending from 0 to `T`, and every pre-default
/// weight strictly below 1 (admissibility: `pi >= 1` makes wealth nonpositive
/// with positive probability once default can occur).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPath {
    times: Vec<f64>,
    pre_weights: Vec<f64>,
}

impl PolicyPath {
    /// Allocation after default: everything in cash.
    pub const POST_DEFAULT_WEIGHT: f64 = 0.0;

    pub fn new(times: Vec<f64>, pre_weights: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter(
                "policy grid needs at least the two endpoints 0 and T".into(),
            ));
        }
        if times.len() != pre_weights.len() {
            return Err(Error::InvalidParameter(format!(
                "times ({}) and pre_weights ({}) must have equal length",
                times.len(),
                pre_weights.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("times[0] must be 0, got {}", times[0])));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("times must be strictly ascending".into()));
        }
        if !times[times.len() - 1].is_finite() {
            return Err(Error::InvalidParameter("maturity must be finite".into()));
        }
        for &pi in &pre_weights {
            if !pi.is_finite() {
                return Err(Error::InvalidParameter(format!("weight must be finite, got {pi}")));
            }
            if pi >= 1.0 {
                return Err(Error::Inadmissible(format!(
                    "pre-default weight {pi} >= 1; admissible controls require pi < 1"
                )));
            }
        }
        Ok(Self { times, pre_weights })
    }

    /// Constant pre-default weight on the horizon's grid.
    pub fn constant(pi: f64, horizon: &Horizon) -> Result<Self> {
        Self::new(horizon.grid(), vec![pi; horizon.n_steps() + 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn pre_weights(&self) -> &[f64] {
        &self.pre_weights
    }

    pub fn maturity(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Largest pre-default weight on the grid (always < 1).
    pub fn max_weight(&self) -> f64 {
        self.pre_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Weight in force at time `t` (cadlag step convention: the value at the
    /// latest grid node `<= t`). Clamped to the grid endpoints.
    pub fn weight_at(&self, t: f64) -> f64 {
        let idx = match self.times.binary_search_by(|node| node.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        self.pre_weights[idx]
    }

    /// Left limit `pi_{t-}`: the weight in force on the grid interval ending
    /// at `t`. Differs from [`Self::weight_at`] only when `t` is a grid node.
    pub fn weight_before(&self, t: f64) -> f64 {
        let idx = match self.times.binary_search_by(|node| node.partial_cmp(&t).unwrap()) {
            Ok(0) | Err(0) => 0,
            Ok(i) => i - 1,
            Err(i) => i - 1,
        };
        self.pre_weights[idx]
    }
}

/// Wealth after default has occurred at `tau`: the stock fraction is wiped
/// out and the cash remainder accrues at `r`, so
/// `W_t = exp(r (t - tau)) (1 - pi_{tau-}) x_tau` for `t >= tau`.
pub fn wealth_given_default(
    x_at_tau: f64,
    pi_at_tau_minus: f64,
    r: f64,
    t: f64,
    tau: f64,
) -> Result<f64> {
    if pi_at_tau_minus >= 1.0 {
        return Err(Error::Inadmissible(format!(
            "pi = {pi_at_tau_minus} >= 1 at default leaves nonpositive wealth"
        )));
    }
    if !(x_at_tau > 0.0) {
        return Err(Error::Domain(format!("wealth at default must be > 0, got {x_at_tau}")));
    }
    if t < tau {
        return Err(Error::Domain(format!("t = {t} must be >= tau = {tau}")));
    }
    Ok((r * (t - tau)).exp() * (1.0 - pi_at_tau_minus) * x_at_tau)
}
