//! Closed-form results for logarithmic utility.
//!
//! The pre-default weight solves the pointwise concave maximization
//! `(mu - r) pi - sigma^2 pi^2 / 2 + lambda log(1 - pi)` over `pi < 1`, whose
//! first-order condition is the quadratic
//! `sigma^2 pi^2 - (mu - r + sigma^2) pi + (mu - r - lambda) = 0`; the smaller
//! root
//!
//! ```text
//! pi_pre = (mu - r + sigma^2 - sqrt((sigma^2 - (mu - r))^2 + 4 lambda sigma^2)) / (2 sigma^2)
//! ```
//!
//! is the optimum. It never exceeds the classical ratio `(mu - r) / sigma^2`
//! and stays strictly below 1 for any `lambda > 0`: a stock that can default
//! must never be bought with borrowed money or with all of one's wealth.
//!
//! Two value-function representations are exposed. `log_value_function_pre`
//! is the conditional *maximized* expected utility given no default by `t`;
//! `log_value_function_reduced` is the *minimized* negative utility of the
//! reduced default-free control problem. They use opposite sign conventions
//! and agree at `t = 0` via `V_reduced(0, w) = -V_pre(0, w)`; converting
//! between them elsewhere is the caller's responsibility.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarketParams;
use crate::numeric::{exp_integral, smaller_quadratic_root};

/// Classical Merton ratio `(mu - r) / (gamma sigma^2)` (no default risk).
pub fn classical_merton_ratio(mp: &MarketParams, gamma: f64) -> f64 {
    assert!(gamma > 0.0, "gamma must be positive, got {gamma}");
    mp.excess_return() / (gamma * mp.variance())
}

/// Optimal constant pre-default weight under log utility.
///
/// For `lambda = 0` the square root collapses and the value reduces to
/// `min((mu - r) / sigma^2, 1)`.
pub fn pre_default_ratio_log(mp: &MarketParams) -> f64 {
    let s2 = mp.variance();
    let excess = mp.excess_return();
    smaller_quadratic_root(s2, -(excess + s2), excess - mp.lambda)
}

/// Drift constant `C*(lambda)` of the log value function:
/// `mu pi + r (1 - pi) - sigma^2 pi^2 / 2 + lambda log(1 - pi)` at the
/// optimal pre-default weight.
///
/// At `lambda = 0` with `mu - r >= sigma^2` the weight hits 1 and the
/// `lambda log(1 - pi)` term vanishes in the limit, leaving
/// `mu - sigma^2 / 2`.
pub fn drift_constant(mp: &MarketParams) -> f64 {
    let pi = pre_default_ratio_log(mp);
    let growth = mp.mu * pi + mp.r * (1.0 - pi) - 0.5 * mp.variance() * pi * pi;
    if mp.lambda == 0.0 {
        growth
    } else {
        growth + mp.lambda * (1.0 - pi).ln()
    }
}

/// Objective of the pointwise HJB minimization,
/// `g(t, x, pi, p, A) = (mu pi + r (1 - pi)) x p + sigma^2 pi^2 x^2 A / 2
/// - lambda e^{-lambda t} log((1 - pi) x)`.
///
/// `p` and `A` stand in for the first and second space derivatives of a
/// candidate value function.
pub fn hjb_objective(mp: &MarketParams, t: f64, x: f64, pi: f64, p: f64, a: f64) -> f64 {
    debug_assert!(pi < 1.0 && x > 0.0);
    let drift = (mp.mu * pi + mp.r * (1.0 - pi)) * x * p;
    let diffusion = 0.5 * mp.variance() * pi * pi * x * x * a;
    let running = if mp.lambda == 0.0 {
        0.0
    } else {
        mp.lambda * (-mp.lambda * t).exp() * ((1.0 - pi) * x).ln()
    };
    drift + diffusion - running
}

/// Minimizer of [`hjb_objective`] over `pi < 1`: the smaller root of
/// `(sigma^2 x^2 A) pi^2 + ((mu-r) x p - sigma^2 x^2 A) pi - ((mu-r) x p + lambda e^{-lambda t}) = 0`.
///
/// For `A <= 0` the minimization is unbounded below and the HJB operator is
/// undefined.
pub fn hjb_pointwise_minimizer(mp: &MarketParams, t: f64, x: f64, p: f64, a: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("wealth must be > 0, got {x}")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::IllPosed(format!(
            "HJB minimization requires a positive second derivative, got A = {a}"
        )));
    }
    let curvature = mp.variance() * x * x * a;
    let slope = mp.excess_return() * x * p;
    Ok(smaller_quadratic_root(
        curvature,
        slope - curvature,
        -(slope + mp.lambda * (-mp.lambda * t).exp()),
    ))
}

/// `H(t, x, p, A) = inf_{pi < 1} g`: the fully nonlinear HJB operator.
pub fn hjb_operator(mp: &MarketParams, t: f64, x: f64, p: f64, a: f64) -> Result<f64> {
    let pi = hjb_pointwise_minimizer(mp, t, x, p, a)?;
    Ok(hjb_objective(mp, t, x, pi, p, a))
}

fn check_time_window(t: f64, maturity: f64) -> Result<()> {
    if !(maturity > 0.0) || !maturity.is_finite() {
        return Err(Error::Domain(format!("maturity must be > 0, got {maturity}")));
    }
    if !(0.0..=maturity).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {maturity}]")));
    }
    Ok(())
}

/// Conditional value function given no default by `t` (maximization form):
/// `log(w) + r (T - t) + (C - r)/lambda (1 - e^{-lambda (T - t)})` with
/// `C` from [`drift_constant`]. At `t = T` this is `log(w)`.
///
/// `lambda = 0` uses the analytic limit `log(w) + C(0) (T - t)` rather than
/// evaluating `(C - r)/lambda`.
pub fn log_value_function_pre(mp: &MarketParams, maturity: f64, t: f64, w: f64) -> Result<f64> {
    check_time_window(t, maturity)?;
    if !(w > 0.0) {
        return Err(Error::Domain(format!("wealth must be > 0, got {w}")));
    }
    let c = drift_constant(mp);
    let remaining = maturity - t;
    if mp.lambda == 0.0 {
        Ok(w.ln() + c * remaining)
    } else {
        Ok(w.ln() + mp.r * remaining + (c - mp.r) * exp_integral(mp.lambda, remaining))
    }
}

/// Value function of the reduced default-free problem (minimization form):
/// `-e^{-lambda t} log(x) - C*/lambda (e^{-lambda t} - e^{-lambda T})
///  - r (T - (1 - e^{-lambda T})/lambda)`.
///
/// `lambda = 0` returns the L'Hopital limit `-log(x) - C*(0) (T - t)`, where
/// `C*(0)` is `r + (mu - r)^2 / (2 sigma^2)` for `mu - r < sigma^2` and
/// `mu - sigma^2 / 2` once the weight saturates at 1.
pub fn log_value_function_reduced(mp: &MarketParams, maturity: f64, t: f64, x: f64) -> Result<f64> {
    check_time_window(t, maturity)?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("wealth must be > 0, got {x}")));
    }
    let c = drift_constant(mp);
    if mp.lambda == 0.0 {
        return Ok(-x.ln() - c * (maturity - t));
    }
    let decay_t = (-mp.lambda * t).exp();
    let decay_maturity = (-mp.lambda * maturity).exp();
    Ok(-decay_t * x.ln()
        - c / mp.lambda * (decay_t - decay_maturity)
        - mp.r * (maturity - exp_integral(mp.lambda, maturity)))
}

/// Analytic `E[log W_T]` for a constant pre-default weight `pi < 1` and
/// `W_0 = 1`: conditioning on the default time,
/// `E[log W_T | tau = t] = r (T - t) + log(1 - pi) + m t` for `t <= T` and
/// `m T` for `tau > T`, with the log-wealth drift
/// `m = mu pi + r (1 - pi) - sigma^2 pi^2 / 2`. Averaging over
/// `tau ~ Exp(lambda)` gives a closed form; at the optimal weight this equals
/// [`log_value_function_pre`] at `t = 0`.
pub fn expected_log_wealth_constant_policy(
    mp: &MarketParams,
    pi: f64,
    maturity: f64,
) -> Result<f64> {
    if pi >= 1.0 {
        return Err(Error::Inadmissible(format!("pi = {pi} >= 1")));
    }
    if !(maturity > 0.0) || !maturity.is_finite() {
        return Err(Error::Domain(format!("maturity must be > 0, got {maturity}")));
    }
    let log_drift = mp.mu * pi + mp.r * (1.0 - pi) - 0.5 * mp.variance() * pi * pi;
    let survival = (-mp.lambda * maturity).exp();
    let default_mass = 1.0 - survival;
    // integral_0^T lambda e^{-lambda t} t dt
    let time_mass = exp_integral(mp.lambda, maturity) - maturity * survival;
    Ok(survival * log_drift * maturity
        + mp.r * (maturity * default_mass - time_mass)
        + (1.0 - pi).ln() * default_mass
        + log_drift * time_mass)
}

/// Total value from the pre/post conditional values by total probability:
/// the survival probability `P{tau > t} = e^{-lambda t}` weights the
/// pre-default state, `1 - e^{-lambda t}` the post-default state.
pub fn total_value_mixture(v_pre: f64, v_post: f64, lambda: f64, t: f64) -> f64 {
    debug_assert!(lambda >= 0.0 && t >= 0.0);
    let survival = (-lambda * t).exp();
    survival * v_pre + (1.0 - survival) * v_post
}

/// Bundled log-utility solution: the constant pre-default weight, the drift
/// constant `C*(lambda)`, and both value-function representations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LogSolution {
    params: MarketParams,
    maturity: f64,
    pi_pre: f64,
    c_star: f64,
}

impl LogSolution {
    pub fn new(params: MarketParams, maturity: f64) -> Result<Self> {
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::InvalidParameter(format!("maturity must be > 0, got {maturity}")));
        }
        let pi_pre = pre_default_ratio_log(&params);
        if pi_pre >= 1.0 {
            // Only reachable for lambda = 0 with mu - r >= sigma^2.
            return Err(Error::Inadmissible(format!(
                "optimal weight {pi_pre} is not strictly below 1"
            )));
        }
        Ok(Self { params, maturity, pi_pre, c_star: drift_constant(&params) })
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    /// Constant optimal pre-default weight.
    pub fn pi_pre(&self) -> f64 {
        self.pi_pre
    }

    /// Drift constant `C*(lambda)`.
    pub fn c_star(&self) -> f64 {
        self.c_star
    }

    /// Maximization-form conditional value, see [`log_value_function_pre`].
    pub fn value_pre(&self, t: f64, w: f64) -> Result<f64> {
        log_value_function_pre(&self.params, self.maturity, t, w)
    }

    /// Minimization-form reduced value, see [`log_value_function_reduced`].
    pub fn value_reduced(&self, t: f64, x: f64) -> Result<f64> {
        log_value_function_reduced(&self.params, self.maturity, t, x)
    }
}
