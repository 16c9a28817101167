//! Optimal stock/cash allocation for a stock that can go bankrupt.
//!
//! The market has one risky asset following a geometric Brownian motion with
//! drift `mu` and volatility `sigma`, a riskless account compounding at `r`,
//! and an exogenous default time `tau ~ Exp(lambda)` independent of the
//! Brownian driver. At default the stock loses all value, so a wealth
//! fraction `pi` held in stock is wiped out: `W_tau = (1 - pi) W_tau-`.
//! Afterwards everything sits in cash.
//!
//! The crate computes the policies that maximize expected isoelastic utility
//! of terminal wealth under these dynamics:
//!
//! * [`log_policy`] — closed forms for logarithmic utility: the constant
//!   pre-default weight, the pointwise HJB minimizer, and both value-function
//!   representations (conditional maximization form and reduced minimization
//!   form) with their `lambda -> 0` limits.
//! * [`power_policy`] — the non-myopic weight path for `gamma != 1`:
//!   terminal root, backward RK4 integration of the weight ODE, the implicit
//!   solution used as an integration oracle, and both value functions.
//! * [`mc`] — a jump-diffusion wealth simulator and Monte Carlo estimators
//!   that verify the analytic policies independently.
//! * [`estimation`] — annualized drift/volatility estimates from daily
//!   closing prices, and the end-to-end allocation report.
//! * [`model`] — shared validated domain types.

pub mod error;
pub mod estimation;
pub mod log_policy;
pub mod mc;
pub mod model;
mod numeric;
pub mod power_policy;

pub use error::{Error, Result};
pub use model::{Horizon, MarketParams, PolicyPath, UtilityKind, UtilitySpec};
