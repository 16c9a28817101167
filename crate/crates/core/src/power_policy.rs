//! Non-myopic optimal weight path for power utility (`gamma != 1`).
//!
//! With the value ansatz `V_pre(t, w) = f(t) w^{1-gamma}/(1-gamma)
//! e^{(1-gamma) r (T-t)}` (power utility here drops the `-1/(1-gamma)`
//! normalization constant), the first-order condition ties `f(t)` to the
//! weight,
//!
//! ```text
//! f(t) = -lambda (1 - pi_t)^{-gamma} / (gamma sigma^2 pi_t - (mu - r)),
//! ```
//!
//! and eliminating `f` turns the scalar value ODE into an autonomous ODE for
//! the weight itself:
//!
//! ```text
//! d pi/dt = kappa(pi) = gamma sigma^2 (1 - pi)(alpha - pi)(pi^2/2 - beta pi + eta) / (pi - beta)
//! ```
//!
//! with `alpha = (mu-r)/(gamma sigma^2)` (the classical Merton ratio),
//! `beta = (mu-r+sigma^2)/((gamma+1) sigma^2)` and
//! `eta = (mu-r-lambda)/(gamma (gamma+1) sigma^2)`. The terminal condition
//! `f(T) = 1` pins the terminal weight as the unique root of
//! `phi(pi) = gamma sigma^2 (alpha - pi) - lambda (1 - pi)^{-gamma}` on
//! `(-inf, 1)`. `phi` is strictly decreasing there (from `+inf` down to
//! `-inf`), so a bracketed bisection is unconditionally safe.
//!
//! The ODE is separable; integrating `1/kappa` by partial fractions gives an
//! implicit solution `Psi(pi_t) = Psi(pi_T) e^{-(T-t)}` that serves as an
//! independent accuracy oracle for the RK4 integration (see
//! [`psi_invariant_check`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Horizon, MarketParams, PolicyPath};

/// `gamma` closer to 1 than this degenerates the weight ODE (`kappa(pi_T)`
/// tends to 0 while `f`-based formulas lose precision); such requests should
/// use [`crate::log_policy`] instead.
pub const GAMMA_POWER_GUARD: f64 = 1e-4;

/// Distance from the `pi = beta` pole of `kappa` below which an integration
/// step is rejected.
const POLE_GUARD: f64 = 1e-10;

/// The three dimensionless constants of the weight ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConstants {
    /// Classical Merton ratio `(mu - r) / (gamma sigma^2)`.
    pub alpha: f64,
    /// `(mu - r + sigma^2) / ((gamma + 1) sigma^2)`.
    pub beta: f64,
    /// `(mu - r - lambda) / (gamma (gamma + 1) sigma^2)`.
    pub eta: f64,
}

impl PowerConstants {
    pub fn new(mp: &MarketParams, gamma: f64) -> Self {
        let s2 = mp.variance();
        let excess = mp.excess_return();
        Self {
            alpha: excess / (gamma * s2),
            beta: (excess + s2) / ((gamma + 1.0) * s2),
            eta: (excess - mp.lambda) / (gamma * (gamma + 1.0) * s2),
        }
    }
}

/// Evaluation context: market parameters, `gamma`, and derived constants.
#[derive(Debug, Clone, Copy)]
struct PowerModel {
    mp: MarketParams,
    gamma: f64,
    gamma_s2: f64,
    constants: PowerConstants,
}

impl PowerModel {
    fn new(mp: &MarketParams, gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma must be a finite positive number, got {gamma}"
            )));
        }
        // Strict interior of the guard interval only: gamma = 1.0001 sits on
        // the boundary (its f64 distance from 1 is a hair under 1e-4) and
        // must still integrate.
        if (gamma - 1.0).abs() < GAMMA_POWER_GUARD * (1.0 - 1e-9) {
            return Err(Error::Domain(format!(
                "gamma = {gamma} is within {GAMMA_POWER_GUARD} of 1; \
                 use the log-utility closed form instead"
            )));
        }
        Ok(Self {
            mp: *mp,
            gamma,
            gamma_s2: gamma * mp.variance(),
            constants: PowerConstants::new(mp, gamma),
        })
    }

    /// Terminal-condition function `phi(pi) = gamma sigma^2 (alpha - pi)
    /// - lambda (1 - pi)^{-gamma}`, strictly decreasing on `(-inf, 1)`.
    fn phi(&self, pi: f64) -> f64 {
        self.gamma_s2 * (self.constants.alpha - pi)
            - self.mp.lambda * (1.0 - pi).powf(-self.gamma)
    }

    fn phi_prime(&self, pi: f64) -> f64 {
        -self.gamma_s2 - self.mp.lambda * self.gamma * (1.0 - pi).powf(-self.gamma - 1.0)
    }

    /// Right-hand side of the weight ODE; errors near the `pi = beta` pole.
    fn kappa(&self, pi: f64) -> Result<f64> {
        let c = &self.constants;
        if (pi - c.beta).abs() < POLE_GUARD {
            return Err(Error::OdeIntegration(format!(
                "weight {pi} within {POLE_GUARD} of the kappa pole at beta = {}",
                c.beta
            )));
        }
        Ok(self.gamma_s2 * (1.0 - pi) * (c.alpha - pi) * (0.5 * pi * pi - c.beta * pi + c.eta)
            / (pi - c.beta))
    }

    /// `f(t)` from the first-order condition, as a function of the weight.
    fn f_of_pi(&self, pi: f64) -> f64 {
        self.mp.lambda * (1.0 - pi).powf(-self.gamma)
            / (self.gamma_s2 * (self.constants.alpha - pi))
    }
}

/// Solves `phi(pi_T) = 0` for the terminal weight; the root is unique on
/// `(-inf, 1)` and lies strictly below `alpha`.
///
/// For `lambda = 0` the equation collapses to `gamma sigma^2 (alpha - pi) = 0`
/// and the root is the classical ratio `alpha`.
pub fn solve_terminal_weight(mp: &MarketParams, gamma: f64) -> Result<f64> {
    let model = PowerModel::new(mp, gamma)?;
    solve_terminal_weight_model(&model)
}

fn solve_terminal_weight_model(model: &PowerModel) -> Result<f64> {
    let alpha = model.constants.alpha;
    if model.mp.lambda == 0.0 {
        return Ok(alpha);
    }

    // Upper end of the bracket: phi(alpha) < 0 whenever alpha < 1; otherwise
    // walk toward the vertical asymptote at 1 until phi turns negative.
    let mut hi = if alpha < 1.0 { alpha } else { 1.0 - 1e-9 };
    let mut tries = 0;
    while !(model.phi(hi) < 0.0) {
        hi = 1.0 - 0.25 * (1.0 - hi);
        tries += 1;
        if tries > 200 || hi >= 1.0 {
            return Err(Error::RootSearch(format!(
                "could not find phi < 0 left of 1 (mp = {:?}, gamma = {})",
                model.mp, model.gamma
            )));
        }
    }

    // Lower end: at alpha - lambda (1-alpha)^{-gamma} / (gamma sigma^2) the
    // linear term equals the barrier term at alpha, so phi is already
    // positive; one extra unit of margin. Fall back to doubling expansion
    // when alpha >= 1 makes that seed unusable.
    let mut lo = if alpha < 1.0 {
        alpha - model.mp.lambda * (1.0 - alpha).powf(-model.gamma) / model.gamma_s2 - 1.0
    } else {
        hi - 1.0
    };
    let mut width = (hi - lo).max(1.0);
    tries = 0;
    while !(model.phi(lo) > 0.0) {
        width *= 2.0;
        lo = hi - width;
        tries += 1;
        if tries > 200 {
            return Err(Error::RootSearch(format!(
                "bracket expansion failed: phi stays nonpositive down to {lo} \
                 (mp = {:?}, gamma = {})",
                model.mp, model.gamma
            )));
        }
    }

    // Bisection on the sign change (phi decreasing), then Newton polish.
    let mut iters = 0;
    while hi - lo > 1e-13 * hi.abs().max(lo.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        if model.phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
        if iters > 2000 {
            break;
        }
    }
    let mut root = 0.5 * (lo + hi);
    for _ in 0..4 {
        let step = model.phi(root) / model.phi_prime(root);
        let next = root - step;
        if next.is_finite() && next > lo - 1.0 && next < 1.0 {
            root = next;
        }
    }
    Ok(root)
}

/// Terminal weight together with the slope `kappa(pi_T)` used by the
/// small-maturity linearization `pi_t ~ pi_T - (T - t) kappa(pi_T)`.
pub fn terminal_linearization(mp: &MarketParams, gamma: f64) -> Result<(f64, f64)> {
    let model = PowerModel::new(mp, gamma)?;
    let pi_terminal = solve_terminal_weight_model(&model)?;
    if model.mp.lambda == 0.0 {
        return Ok((pi_terminal, 0.0));
    }
    Ok((pi_terminal, model.kappa(pi_terminal)?))
}

/// The integrated non-myopic solution: terminal root, backward weight path,
/// recovered `f(t)`, and the ODE constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerSolution {
    params: MarketParams,
    gamma: f64,
    constants: PowerConstants,
    pi_terminal: f64,
    path: PolicyPath,
    f_path: Vec<f64>,
    /// `kappa(pi)` at every grid node; `d pi/dt` along the path.
    slopes: Vec<f64>,
}

/// Integrates `d pi/dt = kappa(pi)` backward from `phi(pi_T) = 0` at `t = T`
/// with classical fixed-step RK4 on the horizon's grid, and recovers `f(t)`
/// from the first-order condition.
///
/// For `lambda = 0` the terminal root is `alpha`, `kappa(alpha) = 0`, and the
/// path is constantly `alpha` with
/// `f(t) = exp((1-gamma) (mu-r)^2 (T-t) / (2 gamma sigma^2))` (the classical
/// Merton value); this requires `alpha < 1` for the path to be admissible.
pub fn integrate_weight_path(
    mp: &MarketParams,
    gamma: f64,
    horizon: &Horizon,
) -> Result<PowerSolution> {
    let model = PowerModel::new(mp, gamma)?;
    let times = horizon.grid();
    let n = horizon.n_steps();

    if mp.lambda == 0.0 {
        let alpha = model.constants.alpha;
        let rate = (1.0 - gamma) * mp.excess_return().powi(2) / (2.0 * model.gamma_s2);
        let maturity = horizon.maturity();
        let f_path: Vec<f64> = times.iter().map(|&t| (rate * (maturity - t)).exp()).collect();
        let path = PolicyPath::new(times, vec![alpha; n + 1])?;
        return Ok(PowerSolution {
            params: *mp,
            gamma,
            constants: model.constants,
            pi_terminal: alpha,
            path,
            f_path,
            slopes: vec![0.0; n + 1],
        });
    }

    let pi_terminal = solve_terminal_weight_model(&model)?;
    let alpha = model.constants.alpha;

    let mut weights = vec![0.0; n + 1];
    weights[n] = pi_terminal;
    for k in (1..=n).rev() {
        let h = times[k] - times[k - 1];
        let pi = weights[k];
        // RK4 with a negative step (integrating toward t = 0).
        let k1 = model.kappa(pi)?;
        let k2 = model.kappa(pi - 0.5 * h * k1)?;
        let k3 = model.kappa(pi - 0.5 * h * k2)?;
        let k4 = model.kappa(pi - h * k3)?;
        let next = pi - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() {
            return Err(Error::OdeIntegration(format!(
                "weight became non-finite at t = {}",
                times[k - 1]
            )));
        }
        if next > alpha + 1e-9 {
            return Err(Error::OdeIntegration(format!(
                "weight {next} left the invariant region (alpha = {alpha}) at t = {}",
                times[k - 1]
            )));
        }
        if next >= 1.0 {
            return Err(Error::Inadmissible(format!(
                "integrated weight {next} >= 1 at t = {}",
                times[k - 1]
            )));
        }
        weights[k - 1] = next;
    }

    let f_path: Vec<f64> = weights.iter().map(|&pi| model.f_of_pi(pi)).collect();
    let slopes = weights.iter().map(|&pi| model.kappa(pi)).collect::<Result<Vec<f64>>>()?;
    let path = PolicyPath::new(times, weights)?;
    Ok(PowerSolution { params: *mp, gamma, constants: model.constants, pi_terminal, path, f_path, slopes })
}

impl PowerSolution {
    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn constants(&self) -> &PowerConstants {
        &self.constants
    }

    /// Terminal weight `pi_T`, the root of `phi`.
    pub fn pi_terminal(&self) -> f64 {
        self.pi_terminal
    }

    pub fn path(&self) -> &PolicyPath {
        &self.path
    }

    /// `f(t)` at the grid nodes, with `f(T) = 1`.
    pub fn f_path(&self) -> &[f64] {
        &self.f_path
    }

    /// `kappa(pi_t)` at the grid nodes.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn maturity(&self) -> f64 {
        self.path.maturity()
    }

    /// Slope of the weight path at maturity, `kappa(pi_T)`.
    pub fn terminal_slope(&self) -> f64 {
        self.slopes[self.slopes.len() - 1]
    }

    /// Weight at an arbitrary `t` by cubic Hermite interpolation (node values
    /// and node slopes are both known, so this is C1 and locally quartic-
    /// accurate). `t` is clamped to `[0, T]`.
    pub fn weight_at(&self, t: f64) -> f64 {
        let times = self.path.times();
        let weights = self.path.pre_weights();
        let n = times.len();
        if t <= times[0] {
            return weights[0];
        }
        if t >= times[n - 1] {
            return weights[n - 1];
        }
        let k = match times.binary_search_by(|node| node.partial_cmp(&t).unwrap()) {
            Ok(i) => return weights[i],
            Err(i) => i - 1,
        };
        let dt = times[k + 1] - times[k];
        let s = (t - times[k]) / dt;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * weights[k] + h10 * dt * self.slopes[k] + h01 * weights[k + 1]
            + h11 * dt * self.slopes[k + 1]
    }

    /// `f(t)` by linear interpolation between grid nodes.
    pub fn f_at(&self, t: f64) -> f64 {
        let times = self.path.times();
        let n = times.len();
        if t <= times[0] {
            return self.f_path[0];
        }
        if t >= times[n - 1] {
            return self.f_path[n - 1];
        }
        let k = match times.binary_search_by(|node| node.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.f_path[i],
            Err(i) => i - 1,
        };
        let s = (t - times[k]) / (times[k + 1] - times[k]);
        (1.0 - s) * self.f_path[k] + s * self.f_path[k + 1]
    }

    /// Small-maturity linearization `pi_T - (T - t) kappa(pi_T)`. Advertised
    /// for `T - t` up to about one year; beyond that the path bends.
    pub fn linearized_weight(&self, t: f64) -> f64 {
        self.pi_terminal - (self.maturity() - t) * self.terminal_slope()
    }
}

/// Constants of the implicit solution `Psi(pi_t) = Psi(pi_T) e^{-(T-t)}`.
///
/// `Psi` is `exp` of the partial-fractions antiderivative of `1/kappa`:
///
/// ```text
/// log Psi(pi) = -2(1-beta) d1 log(1-pi) - 2(beta-alpha) d2 log(alpha-pi)
///             + (D - (d1-d2) sqrt(Delta)) log(pi - q-)
///             + (D + (d1-d2) sqrt(Delta)) log(q+ - pi)
/// ```
///
/// The residue identity `E + F = A + B` of the decomposition pins the sign of
/// the `(1-pi)` exponent to the negative branch shown here.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PsiConstants {
    pub d1: f64,
    pub d2: f64,
    /// `D = (1-beta) d1 + (beta-alpha) d2`.
    pub cap_d: f64,
    /// `Delta = beta^2 - 2 eta`.
    pub delta: f64,
    /// `q- = beta - sqrt(Delta)`.
    pub q_minus: f64,
    /// `q+ = beta + sqrt(Delta)`.
    pub q_plus: f64,
    alpha: f64,
    exponents: [f64; 4],
}

impl PsiConstants {
    /// Builds the constants, or reports why the check is unavailable
    /// (`Delta < 0`, degenerate denominators, or `alpha = 1`).
    pub fn try_new(mp: &MarketParams, gamma: f64) -> std::result::Result<Self, String> {
        let c = PowerConstants::new(mp, gamma);
        let gamma_s2 = gamma * mp.variance();
        let delta = c.beta * c.beta - 2.0 * c.eta;
        if delta < 0.0 {
            return Err(format!("Delta = beta^2 - 2 eta = {delta} < 0"));
        }
        if (1.0 - c.alpha).abs() < 1e-12 {
            return Err("alpha = 1 degenerates d1 and d2".into());
        }
        let den1 = 2.0 * c.beta - 2.0 * c.eta - 1.0;
        let den2 = 2.0 * c.alpha * c.beta - c.alpha * c.alpha - 2.0 * c.eta;
        if den1.abs() < 1e-12 || den2.abs() < 1e-12 {
            return Err(format!("degenerate exponent denominators ({den1}, {den2})"));
        }
        let d1 = 1.0 / (gamma_s2 * (1.0 - c.alpha) * den1);
        let d2 = 1.0 / (gamma_s2 * (1.0 - c.alpha) * den2);
        let cap_d = (1.0 - c.beta) * d1 + (c.beta - c.alpha) * d2;
        let sqrt_delta = delta.sqrt();
        Ok(Self {
            d1,
            d2,
            cap_d,
            delta,
            q_minus: c.beta - sqrt_delta,
            q_plus: c.beta + sqrt_delta,
            alpha: c.alpha,
            exponents: [
                -2.0 * (1.0 - c.beta) * d1,
                -2.0 * (c.beta - c.alpha) * d2,
                cap_d - (d1 - d2) * sqrt_delta,
                cap_d + (d1 - d2) * sqrt_delta,
            ],
        })
    }

    /// `log Psi(pi)`, or `None` when any base factor is nonpositive (the
    /// real-power form is then undefined).
    pub fn log_psi(&self, pi: f64) -> Option<f64> {
        let bases = [1.0 - pi, self.alpha - pi, pi - self.q_minus, self.q_plus - pi];
        if bases.iter().any(|&b| b <= 0.0) {
            return None;
        }
        Some(
            self.exponents
                .iter()
                .zip(bases.iter())
                .map(|(e, b)| e * b.ln())
                .sum(),
        )
    }
}

/// Outcome of the implicit-solution accuracy check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PsiCheck {
    /// Max over the grid of `|Psi(pi_t) / (Psi(pi_T) e^{-(T-t)}) - 1|`,
    /// evaluated in log space.
    Defect { max_relative_defect: f64 },
    /// The real-power form of `Psi` is not defined for this path.
    Unavailable { reason: String },
}

/// Checks the integrated path against `Psi(pi_t) = Psi(pi_T) e^{-(T-t)}`.
/// Degrades to [`PsiCheck::Unavailable`] (not a failure) when the constants
/// or any base factor leave the domain of validity.
pub fn psi_invariant_check(solution: &PowerSolution) -> PsiCheck {
    if solution.params.lambda == 0.0 {
        return PsiCheck::Unavailable {
            reason: "constant path (lambda = 0): kappa is identically 0 at alpha".into(),
        };
    }
    let constants = match PsiConstants::try_new(&solution.params, solution.gamma) {
        Ok(c) => c,
        Err(reason) => return PsiCheck::Unavailable { reason },
    };
    let log_psi_terminal = match constants.log_psi(solution.pi_terminal) {
        Some(v) => v,
        None => {
            return PsiCheck::Unavailable {
                reason: format!(
                    "base factor nonpositive at pi_T = {}",
                    solution.pi_terminal
                ),
            }
        }
    };
    let maturity = solution.maturity();
    let mut max_defect = 0.0f64;
    for (&t, &pi) in solution.path.times().iter().zip(solution.path.pre_weights()) {
        let log_psi = match constants.log_psi(pi) {
            Some(v) => v,
            None => {
                return PsiCheck::Unavailable {
                    reason: format!("base factor nonpositive at pi = {pi} (t = {t})"),
                }
            }
        };
        let defect = f64::exp_m1(log_psi - (log_psi_terminal - (maturity - t))).abs();
        max_defect = max_defect.max(defect);
    }
    PsiCheck::Defect { max_relative_defect: max_defect }
}

/// Pre-default value under the ansatz:
/// `f(t) w^{1-gamma}/(1-gamma) e^{(1-gamma) r (T-t)}`, with `f` linearly
/// interpolated between grid nodes. At `t = T` this is `w^{1-gamma}/(1-gamma)`.
pub fn power_value_pre(solution: &PowerSolution, t: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::Domain(format!("wealth must be > 0, got {w}")));
    }
    let maturity = solution.maturity();
    if !(0.0..=maturity).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {maturity}]")));
    }
    let one_minus_gamma = 1.0 - solution.gamma;
    let discount = (one_minus_gamma * solution.params.r * (maturity - t)).exp();
    Ok(solution.f_at(t) * w.powf(one_minus_gamma) / one_minus_gamma * discount)
}

/// Post-default conditional value: the stock fraction `pi` is lost and the
/// remainder accrues at `r`, giving
/// `e^{(1-gamma) r (T-t)} w^{1-gamma}/(1-gamma) (1-pi)^{1-gamma}`.
pub fn power_value_post(
    mp: &MarketParams,
    gamma: f64,
    maturity: f64,
    t: f64,
    w: f64,
    pi_at_t: f64,
) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 || (gamma - 1.0).abs() <= crate::model::GAMMA_LOG_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "power_value_post requires finite gamma > 0 with gamma != 1, got {gamma}"
        )));
    }
    if pi_at_t >= 1.0 {
        return Err(Error::Inadmissible(format!("pi = {pi_at_t} >= 1 at default")));
    }
    if !(w > 0.0) {
        return Err(Error::Domain(format!("wealth must be > 0, got {w}")));
    }
    if !(0.0..=maturity).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {maturity}]")));
    }
    let one_minus_gamma = 1.0 - gamma;
    Ok((one_minus_gamma * mp.r * (maturity - t)).exp() * w.powf(one_minus_gamma)
        / one_minus_gamma
        * (1.0 - pi_at_t).powf(one_minus_gamma))
}

/// The reduced objective `h(t, pi)` whose maximizer over `pi < 1` is the
/// weight path:
/// `-(lambda (1-pi)^{1-gamma} + (gamma (gamma-1) sigma^2 pi^2 / 2
///   - (gamma-1)(mu-r) pi - lambda) f) / (gamma - 1)`.
pub fn power_h_objective(mp: &MarketParams, gamma: f64, f_t: f64, pi: f64) -> f64 {
    debug_assert!(pi < 1.0);
    let quad = 0.5 * gamma * (gamma - 1.0) * mp.variance() * pi * pi
        - (gamma - 1.0) * mp.excess_return() * pi
        - mp.lambda;
    -(mp.lambda * (1.0 - pi).powf(1.0 - gamma) + quad * f_t) / (gamma - 1.0)
}

/// Relative HJB residual of the ansatz value at interior grid node `k`:
/// the time derivative is probed with a central difference across the
/// neighbouring nodes while the space derivatives come from the ansatz, so a
/// path that fails to solve the weight ODE shows up as a nonzero residual.
pub fn hjb_power_residual_at_node(solution: &PowerSolution, k: usize, w: f64) -> Result<f64> {
    let times = solution.path.times();
    let n = times.len();
    if k == 0 || k + 1 >= n {
        return Err(Error::Domain(format!("node {k} is not interior (grid size {n})")));
    }
    if !(w > 0.0) {
        return Err(Error::Domain(format!("wealth must be > 0, got {w}")));
    }
    let mp = &solution.params;
    let gamma = solution.gamma;
    let maturity = solution.maturity();
    let one_minus_gamma = 1.0 - gamma;

    let value_at = |idx: usize| {
        solution.f_path[idx] * w.powf(one_minus_gamma) / one_minus_gamma
            * (one_minus_gamma * mp.r * (maturity - times[idx])).exp()
    };
    let dv_dt = (value_at(k + 1) - value_at(k - 1)) / (times[k + 1] - times[k - 1]);

    let t = times[k];
    let pi = solution.path.pre_weights()[k];
    let f_k = solution.f_path[k];
    let discount = (one_minus_gamma * mp.r * (maturity - t)).exp();
    let value = f_k * w.powf(one_minus_gamma) / one_minus_gamma * discount;
    let dv_dw = f_k * w.powf(-gamma) * discount;
    let d2v_dw2 = -gamma * f_k * w.powf(-gamma - 1.0) * discount;

    let drift = w * (mp.mu * pi + mp.r * (1.0 - pi)) * dv_dw;
    let diffusion = 0.5 * mp.variance() * pi * pi * w * w * d2v_dw2;
    let switching = mp.lambda * (power_value_post(mp, gamma, maturity, t, w, pi)? - value);

    let residual = dv_dt + drift + diffusion + switching;
    let scale = dv_dt
        .abs()
        .max(drift.abs())
        .max(diffusion.abs())
        .max(switching.abs())
        .max(f64::MIN_POSITIVE);
    Ok(residual.abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_params() -> MarketParams {
        MarketParams::new(0.4027, 0.5905, 0.0501, 0.024).unwrap()
    }

    #[test]
    fn constants_identity() {
        for gamma in [0.5, 1.5, 2.0, 2.5, 3.0, 7.0] {
            let c = PowerConstants::new(&reference_params(), gamma);
            let identity = (1.0 - c.alpha) / (gamma + 1.0);
            assert!(
                (c.beta - c.alpha - identity).abs() <= 1e-12,
                "beta - alpha != (1 - alpha)/(gamma + 1) for gamma = {gamma}"
            );
        }
    }

    #[test]
    fn terminal_weight_matches_published_roots() {
        let mp = reference_params();
        for (gamma, expected) in [(1.5, 0.53132), (2.0, 0.40766), (2.5, 0.32974), (3.0, 0.27657)] {
            let root = solve_terminal_weight(&mp, gamma).unwrap();
            assert!(
                (root - expected).abs() < 5e-4,
                "gamma = {gamma}: root {root} vs expected {expected}"
            );
            let alpha = PowerConstants::new(&mp, gamma).alpha;
            assert!(root < alpha, "root must lie below the classical ratio");
        }
    }

    #[test]
    fn terminal_weight_residual_is_tiny() {
        let mp = reference_params();
        for gamma in [1.5, 2.0, 2.5, 3.0, 8.0, 0.3] {
            let model = PowerModel::new(&mp, gamma).unwrap();
            let root = solve_terminal_weight(&mp, gamma).unwrap();
            assert!(
                model.phi(root).abs() < 1e-10,
                "phi residual {} for gamma = {gamma}",
                model.phi(root)
            );
        }
    }

    #[test]
    fn terminal_weight_lambda_limit() {
        // lambda = 0 returns alpha exactly; a vanishing intensity approaches it.
        let mp0 = MarketParams::new(0.10, 0.3, 0.02, 0.0).unwrap();
        let alpha = PowerConstants::new(&mp0, 2.0).alpha;
        assert_eq!(solve_terminal_weight(&mp0, 2.0).unwrap(), alpha);

        let mp_eps = MarketParams::new(0.10, 0.3, 0.02, 1e-12).unwrap();
        assert!((solve_terminal_weight(&mp_eps, 2.0).unwrap() - alpha).abs() < 1e-9);
    }

    /// The paper's appendix describes phi as increasing, but with the stated
    /// sign convention phi' = -gamma sigma^2 - lambda gamma (1-pi)^{-gamma-1}
    /// is strictly negative; the root is unique either way. Pin the actual
    /// monotonicity so a silent sign flip cannot creep in.
    #[test]
    fn phi_is_strictly_decreasing_with_unique_root() {
        let mp = reference_params();
        let model = PowerModel::new(&mp, 2.0).unwrap();
        let mut previous = f64::INFINITY;
        let mut sign_changes = 0;
        let mut last_sign = model.phi(-6.0) > 0.0;
        for k in 0..2000 {
            let pi = -6.0 + 6.9 * k as f64 / 1999.0;
            let value = model.phi(pi);
            assert!(value < previous, "phi must strictly decrease at pi = {pi}");
            previous = value;
            let sign = value > 0.0;
            if sign != last_sign {
                sign_changes += 1;
                last_sign = sign;
            }
        }
        assert_eq!(sign_changes, 1, "phi must cross zero exactly once");
    }

    #[test]
    fn gamma_guard_routes_to_log() {
        let mp = reference_params();
        assert!(matches!(solve_terminal_weight(&mp, 1.0), Err(Error::Domain(_))));
        assert!(matches!(solve_terminal_weight(&mp, 1.00005), Err(Error::Domain(_))));
        // 1.0001 sits just outside the guard and must integrate.
        assert!(solve_terminal_weight(&mp, 1.0001).is_ok());
        assert!(solve_terminal_weight(&mp, -2.0).is_err());
    }

    #[test]
    fn integrated_path_tracks_linearization() {
        let mp = reference_params();
        let horizon = Horizon::with_default_steps(1.0).unwrap();
        let sol = integrate_weight_path(&mp, 2.0, &horizon).unwrap();
        // Published linearization: 0.40766 - 0.00511 (T - t).
        let mut max_dev = 0.0f64;
        for (&t, &pi) in sol.path().times().iter().zip(sol.path().pre_weights()) {
            let linear = 0.40766 - 0.00511 * (1.0 - t);
            max_dev = max_dev.max((pi - linear).abs());
        }
        assert!(max_dev < 5e-4, "max deviation from published linearization: {max_dev}");
    }

    #[test]
    fn near_log_gamma_path_is_almost_constant() {
        let mp = reference_params();
        let horizon = Horizon::with_default_steps(1.0).unwrap();
        let sol = integrate_weight_path(&mp, 1.0001, &horizon).unwrap();
        let weights = sol.path().pre_weights();
        let total_variation: f64 =
            weights.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        assert!(total_variation < 1e-4, "total variation {total_variation}");
    }

    #[test]
    fn lambda_zero_path_is_constant_alpha() {
        let mp = MarketParams::new(0.10, 0.3, 0.02, 0.0).unwrap();
        let horizon = Horizon::new(2.0, 500).unwrap();
        let sol = integrate_weight_path(&mp, 2.0, &horizon).unwrap();
        let alpha = sol.constants().alpha;
        assert!(sol.path().pre_weights().iter().all(|&pi| pi == alpha));
        assert_eq!(*sol.f_path().last().unwrap(), 1.0);
        // Classical Merton value: f(0) = exp((1-gamma)(mu-r)^2 T / (2 gamma sigma^2)).
        let expected =
            ((1.0 - 2.0) * mp.excess_return().powi(2) * 2.0 / (2.0 * 2.0 * mp.variance())).exp();
        assert_relative_eq!(sol.f_path()[0], expected, max_relative = 1e-12);

        // An inadmissible classical ratio cannot form a policy once defaults
        // are off the table but the path type still demands pi < 1.
        let hot = MarketParams::new(0.40, 0.2, 0.02, 0.0).unwrap();
        assert!(integrate_weight_path(&hot, 2.0, &Horizon::new(1.0, 100).unwrap()).is_err());
    }

    #[test]
    fn solution_invariants_hold_along_path() {
        let mp = reference_params();
        for gamma in [1.5, 2.0, 3.0] {
            let horizon = Horizon::with_default_steps(10.0).unwrap();
            let sol = integrate_weight_path(&mp, gamma, &horizon).unwrap();
            let alpha = sol.constants().alpha;
            assert!((sol.f_path().last().unwrap() - 1.0).abs() < 1e-10, "f(T) = 1");
            for (&pi, &f) in sol.path().pre_weights().iter().zip(sol.f_path()) {
                assert!(pi <= alpha + 1e-12, "pi {pi} above alpha {alpha}");
                assert!(pi < 1.0);
                assert!(f > 0.0, "f must stay positive");
            }
            // Fermat condition along the path ties pi and f together.
            for (&pi, &f) in sol.path().pre_weights().iter().zip(sol.f_path()) {
                let residual = (mp.excess_return() - gamma * mp.variance() * pi) * f
                    - mp.lambda * (1.0 - pi).powf(-gamma);
                assert!(
                    residual.abs() < 1e-8 * f.abs(),
                    "optimality residual {residual} at pi = {pi}"
                );
            }
        }
    }

    #[test]
    fn f_satisfies_value_ode() {
        // Central-difference f' against the scalar value ODE
        // f'/(gamma-1) + (gamma sigma^2 pi^2/2 - (mu-r) pi - lambda/(gamma-1)) f
        //   + lambda/(gamma-1) (1-pi)^{1-gamma} = 0.
        let mp = reference_params();
        let gamma = 2.0;
        let horizon = Horizon::with_default_steps(1.0).unwrap();
        let sol = integrate_weight_path(&mp, gamma, &horizon).unwrap();
        let times = sol.path().times();
        let f = sol.f_path();
        let pi = sol.path().pre_weights();
        for k in 1..times.len() - 1 {
            let df = (f[k + 1] - f[k - 1]) / (times[k + 1] - times[k - 1]);
            let residual = df / (gamma - 1.0)
                + (0.5 * gamma * mp.variance() * pi[k] * pi[k]
                    - mp.excess_return() * pi[k]
                    - mp.lambda / (gamma - 1.0))
                    * f[k]
                + mp.lambda / (gamma - 1.0) * (1.0 - pi[k]).powf(1.0 - gamma);
            assert!(
                residual.abs() < 1e-5 * f[k].abs().max(1.0),
                "ODE residual {residual} at node {k}"
            );
        }
    }

    #[test]
    fn h_is_concave_at_the_path() {
        let mp = reference_params();
        let gamma = 2.0;
        let horizon = Horizon::new(1.0, 200).unwrap();
        let sol = integrate_weight_path(&mp, gamma, &horizon).unwrap();
        let eps = 1e-4;
        for (&pi, &f) in sol.path().pre_weights().iter().zip(sol.f_path()) {
            let dd = power_h_objective(&mp, gamma, f, pi + eps)
                - 2.0 * power_h_objective(&mp, gamma, f, pi)
                + power_h_objective(&mp, gamma, f, pi - eps);
            assert!(dd <= 0.0, "h must be concave at pi = {pi}, got second difference {dd}");
        }
    }

    #[test]
    fn path_maximizes_h_over_grid() {
        let mp = reference_params();
        let gamma = 2.0;
        let horizon = Horizon::new(1.0, 100).unwrap();
        let sol = integrate_weight_path(&mp, gamma, &horizon).unwrap();
        for (&pi, &f) in sol.path().pre_weights().iter().zip(sol.f_path()).step_by(10) {
            let h_star = power_h_objective(&mp, gamma, f, pi);
            for k in 0..400 {
                let candidate = -3.0 + (0.999 + 3.0) * k as f64 / 399.0;
                let h = power_h_objective(&mp, gamma, f, candidate);
                assert!(
                    h <= h_star + 1e-10 * h_star.abs().max(1.0),
                    "h({candidate}) = {h} exceeds h(pi_t) = {h_star}"
                );
            }
        }
    }

    #[test]
    fn grid_refinement_converges_at_order_four() {
        let mp = reference_params();
        let coarse = integrate_weight_path(&mp, 2.0, &Horizon::new(1.0, 1000).unwrap()).unwrap();
        let fine = integrate_weight_path(&mp, 2.0, &Horizon::new(1.0, 2000).unwrap()).unwrap();
        let mut max_change = 0.0f64;
        for (k, &pi) in coarse.path().pre_weights().iter().enumerate() {
            max_change = max_change.max((pi - fine.path().pre_weights()[2 * k]).abs());
        }
        assert!(max_change < 1e-8, "halving the step moved the path by {max_change}");
    }

    #[test]
    fn terminal_root_decreases_in_gamma() {
        let mp = reference_params();
        let mut previous = f64::INFINITY;
        for gamma in [1.5, 2.0, 2.5, 3.0] {
            let root = solve_terminal_weight(&mp, gamma).unwrap();
            assert!(root < previous, "pi_T must decrease in gamma");
            previous = root;
        }
    }

    #[test]
    fn psi_check_certifies_integration() {
        let mp = reference_params();
        let sol = integrate_weight_path(&mp, 2.0, &Horizon::with_default_steps(1.0).unwrap())
            .unwrap();
        match psi_invariant_check(&sol) {
            PsiCheck::Defect { max_relative_defect } => {
                assert!(max_relative_defect < 1e-6, "defect {max_relative_defect}");
            }
            PsiCheck::Unavailable { reason } => panic!("check unexpectedly unavailable: {reason}"),
        }

        // Long-horizon stress.
        let sol30 = integrate_weight_path(&mp, 3.0, &Horizon::with_default_steps(30.0).unwrap())
            .unwrap();
        match psi_invariant_check(&sol30) {
            PsiCheck::Defect { max_relative_defect } => {
                assert!(max_relative_defect < 1e-5, "defect {max_relative_defect}");
            }
            PsiCheck::Unavailable { reason } => panic!("check unexpectedly unavailable: {reason}"),
        }
    }

    #[test]
    fn psi_check_degrades_gracefully() {
        // lambda = 0: constant path, alpha - pi vanishes.
        let mp0 = MarketParams::new(0.10, 0.3, 0.02, 0.0).unwrap();
        let sol = integrate_weight_path(&mp0, 2.0, &Horizon::new(1.0, 100).unwrap()).unwrap();
        assert!(matches!(psi_invariant_check(&sol), PsiCheck::Unavailable { .. }));

        // Delta < 0: 2 (gamma+1) sigma^2 (mu-r-lambda) > gamma (mu-r+sigma^2)^2.
        let mp_neg = MarketParams::new(1.0, 1.0, 0.0, 0.01).unwrap();
        assert!(PsiConstants::try_new(&mp_neg, 0.5).is_err());
        let sol_neg =
            integrate_weight_path(&mp_neg, 0.5, &Horizon::new(1.0, 1000).unwrap()).unwrap();
        assert!(matches!(psi_invariant_check(&sol_neg), PsiCheck::Unavailable { .. }));
    }

    #[test]
    fn psi_derivative_matches_inverse_kappa() {
        // d/dpi log Psi must equal 1/kappa; probes the partial-fractions
        // exponents independently of the integrator.
        let mp = reference_params();
        let gamma = 2.0;
        let model = PowerModel::new(&mp, gamma).unwrap();
        let constants = PsiConstants::try_new(&mp, gamma).unwrap();
        for pi in [0.32, 0.36, 0.40, 0.404] {
            let h = 1e-6;
            let derivative =
                (constants.log_psi(pi + h).unwrap() - constants.log_psi(pi - h).unwrap())
                    / (2.0 * h);
            let inverse_kappa = 1.0 / model.kappa(pi).unwrap();
            assert_relative_eq!(derivative, inverse_kappa, max_relative = 1e-6);
        }
    }

    #[test]
    fn value_pre_terminal_and_interpolation() {
        let mp = reference_params();
        let sol = integrate_weight_path(&mp, 2.0, &Horizon::new(1.0, 1000).unwrap()).unwrap();
        assert_relative_eq!(power_value_pre(&sol, 1.0, 1.0).unwrap(), -1.0, max_relative = 1e-10);
        // Linear interpolation lands between the neighbouring node values.
        let t = 0.50037;
        let v = power_value_pre(&sol, t, 1.0).unwrap();
        let lo = power_value_pre(&sol, 0.500, 1.0).unwrap();
        let hi = power_value_pre(&sol, 0.501, 1.0).unwrap();
        assert!(v >= lo.min(hi) && v <= lo.max(hi));
        assert!(power_value_pre(&sol, 0.5, 0.0).is_err());
        assert!(power_value_pre(&sol, 2.0, 1.0).is_err());
    }

    #[test]
    fn value_post_examples() {
        let mp = MarketParams::new(0.10, 0.3, 0.05, 0.02).unwrap();
        // gamma = 2, r = 0.05, T - t = 1, w = 1, pi = 0.5:
        // e^{-0.05} * (-1) * 0.5^{-1} = -2 e^{-0.05}.
        assert_relative_eq!(
            power_value_post(&mp, 2.0, 1.0, 0.0, 1.0, 0.5).unwrap(),
            -2.0 * (-0.05f64).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            power_value_post(&mp, 2.0, 1.0, 1.0, 1.0, 0.0).unwrap(),
            -1.0,
            max_relative = 1e-14
        );
        // pi = 0: riskless accrual only.
        assert_relative_eq!(
            power_value_post(&mp, 2.0, 2.0, 0.5, 2.0, 0.0).unwrap(),
            (-0.05f64 * 1.5).exp() * 0.5f64 / -1.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            power_value_post(&mp, 2.0, 1.0, 0.0, 1.0, 1.0),
            Err(Error::Inadmissible(_))
        ));
        assert!(power_value_post(&mp, 1.0, 1.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn linearization_matches_published_slopes() {
        let mp = reference_params();
        for (gamma, root, slope) in
            [(1.5, 0.53132, 0.00449), (2.0, 0.40766, 0.00511), (2.5, 0.32974, 0.00489), (3.0, 0.27657, 0.00451)]
        {
            let (pi_terminal, kappa_terminal) = terminal_linearization(&mp, gamma).unwrap();
            assert!((pi_terminal - root).abs() < 5e-4, "gamma = {gamma}: root {pi_terminal}");
            assert!(
                (kappa_terminal - slope).abs() < 5e-5,
                "gamma = {gamma}: slope {kappa_terminal} vs {slope}"
            );
        }

        let sol = integrate_weight_path(&mp, 2.5, &Horizon::new(1.0, 1000).unwrap()).unwrap();
        assert_eq!(sol.linearized_weight(sol.maturity()), sol.pi_terminal());
        let lin = sol.linearized_weight(0.0);
        assert!((lin - (0.32974 - 0.00489)).abs() < 6e-4);
    }

    #[test]
    fn hermite_weight_interpolation_is_accurate() {
        let mp = reference_params();
        let coarse = integrate_weight_path(&mp, 2.0, &Horizon::new(1.0, 100).unwrap()).unwrap();
        let fine = integrate_weight_path(&mp, 2.0, &Horizon::new(1.0, 10_000).unwrap()).unwrap();
        for k in 0..40 {
            let t = 0.012_3 + k as f64 * 0.024;
            assert!(
                (coarse.weight_at(t) - fine.weight_at(t)).abs() < 1e-10,
                "interpolated weight diverges at t = {t}"
            );
        }
    }

    #[test]
    fn hjb_residual_small_on_interior_nodes() {
        let mp = reference_params();
        for gamma in [1.5, 2.0, 3.0] {
            let sol =
                integrate_weight_path(&mp, gamma, &Horizon::with_default_steps(1.0).unwrap())
                    .unwrap();
            let n = sol.path().times().len();
            for k in (20..n - 1).step_by(20) {
                for w in [0.5, 1.0, 2.0] {
                    let residual = hjb_power_residual_at_node(&sol, k, w).unwrap();
                    assert!(
                        residual < 1e-5,
                        "relative residual {residual} at node {k}, gamma = {gamma}, w = {w}"
                    );
                }
            }
        }
    }
}
