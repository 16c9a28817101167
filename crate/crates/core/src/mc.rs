//! Jump-diffusion wealth simulator and Monte Carlo estimators.
//!
//! Wealth follows the exact log-normal GBM step for the piecewise-constant
//! weight in force on each interval, so the diffusion part carries no
//! discretization bias. The default time is drawn by inverse CDF
//! `tau = -log(1-U)/lambda` from a substream keyed separately from the
//! Brownian increments, which keeps the Brownian draws identical across
//! `lambda` values and across policies (common random numbers). At
//! `tau <= T` the stock fraction in force just before the jump is wiped out,
//! `W_tau = (1 - pi_{tau-}) W_{tau-}`, and the remainder accrues at `r`.
//!
//! Every per-path RNG is keyed by `(seed, path index, stream)`, so results
//! are invariant to execution order and degree of parallelism; aggregation
//! sums path values in index order with compensated summation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Horizon, MarketParams, PolicyPath, UtilitySpec};
use crate::numeric::{exp_integral, mean_and_stderr};

const STREAM_DEFAULT_TIME: u64 = 0;
const STREAM_BROWNIAN: u64 = 1;

/// Stepping scheme: only the exact log-space GBM step is provided.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepScheme {
    #[default]
    GbmExact,
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: StepScheme,
    /// Step (years) at which time-varying policies are frozen to their
    /// left-node value. The actual step is `T / ceil(T / dt)` so the grid
    /// lands on `T` exactly.
    pub dt: f64,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64, dt: f64) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self { n_paths, seed, scheme: StepScheme::GbmExact, dt })
    }
}

/// The default jump on a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefaultEvent {
    pub time: f64,
    /// Weight in force just before the jump (`pi_{tau-}`).
    pub weight_before: f64,
    pub wealth_before: f64,
    pub wealth_after: f64,
}

/// A simulated wealth path on the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthTrajectory {
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    /// Weight applied on each grid interval (one fewer than nodes).
    pub weights: Vec<f64>,
    /// Default time; `f64::INFINITY` when `tau > T`.
    pub tau: f64,
    pub default_event: Option<DefaultEvent>,
}

impl WealthTrajectory {
    pub fn terminal_wealth(&self) -> f64 {
        *self.wealth.last().expect("trajectory has at least one node")
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

fn substream(seed: u64, path: u64, stream: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&path.to_le_bytes());
    key[16..24].copy_from_slice(&stream.to_le_bytes());
    key[24..].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

fn draw_default_time(lambda: f64, seed: u64, path: u64) -> f64 {
    if lambda == 0.0 {
        return f64::INFINITY;
    }
    let mut rng = substream(seed, path, STREAM_DEFAULT_TIME);
    let u: f64 = rng.gen(); // in [0, 1)
    -f64::ln_1p(-u) / lambda
}

/// Node-by-node observer for a simulated path; the no-op recorder keeps the
/// estimator-only code paths allocation-free.
trait Recorder {
    fn node(&mut self, t: f64, w: f64);
    fn interval_weight(&mut self, pi: f64);
    fn default_event(&mut self, event: DefaultEvent);
}

struct NoRecord;

impl Recorder for NoRecord {
    fn node(&mut self, _t: f64, _w: f64) {}
    fn interval_weight(&mut self, _pi: f64) {}
    fn default_event(&mut self, _event: DefaultEvent) {}
}

struct FullRecord {
    times: Vec<f64>,
    wealth: Vec<f64>,
    weights: Vec<f64>,
    event: Option<DefaultEvent>,
}

impl Recorder for FullRecord {
    fn node(&mut self, t: f64, w: f64) {
        self.times.push(t);
        self.wealth.push(w);
    }
    fn interval_weight(&mut self, pi: f64) {
        self.weights.push(pi);
    }
    fn default_event(&mut self, event: DefaultEvent) {
        self.event = Some(event);
    }
}

/// Simulates one path on a uniform grid with `n_steps` intervals; returns
/// terminal wealth. Exact GBM step per interval; default handled at the
/// exact (continuous) jump time with the left-limit weight.
fn simulate_path<R: Recorder>(
    mp: &MarketParams,
    policy: &PolicyPath,
    maturity: f64,
    n_steps: usize,
    seed: u64,
    path_index: u64,
    recorder: &mut R,
) -> (f64, f64) {
    let tau = draw_default_time(mp.lambda, seed, path_index);
    let mut bm = substream(seed, path_index, STREAM_BROWNIAN);
    let mut w = 1.0;
    recorder.node(0.0, w);
    let grid_time = |k: usize| {
        if k == n_steps {
            maturity
        } else {
            maturity * k as f64 / n_steps as f64
        }
    };
    // Left limit at t = 0: no prior interval, so the opening weight applies.
    let mut pi_prev = policy.weight_at(0.0);

    for k in 0..n_steps {
        let t0 = grid_time(k);
        let t1 = grid_time(k + 1);

        if tau <= t0 {
            // tau landed exactly on the node t0; the weight in force on the
            // interval ending here takes the hit (cadlag convention).
            let after = (1.0 - pi_prev) * w;
            recorder.default_event(DefaultEvent {
                time: tau,
                weight_before: pi_prev,
                wealth_before: w,
                wealth_after: after,
            });
            for j in (k + 1)..=n_steps {
                let t = grid_time(j);
                recorder.interval_weight(PolicyPath::POST_DEFAULT_WEIGHT);
                recorder.node(t, after * (mp.r * (t - tau)).exp());
            }
            return (after * (mp.r * (maturity - tau)).exp(), tau);
        }

        let pi = policy.weight_at(t0);
        let growth = mp.mu * pi + mp.r * (1.0 - pi);
        let vol = mp.sigma * pi;

        if tau < t1 {
            // Default inside this interval: evolve exactly to tau, jump,
            // then accrue at r for the rest of the horizon.
            let dt = tau - t0;
            let z: f64 = bm.sample(StandardNormal);
            let before = w * ((growth - 0.5 * vol * vol) * dt + vol * dt.sqrt() * z).exp();
            let after = (1.0 - pi) * before;
            recorder.default_event(DefaultEvent {
                time: tau,
                weight_before: pi,
                wealth_before: before,
                wealth_after: after,
            });
            recorder.interval_weight(pi);
            recorder.node(t1, after * (mp.r * (t1 - tau)).exp());
            for j in (k + 2)..=n_steps {
                let t = grid_time(j);
                recorder.interval_weight(PolicyPath::POST_DEFAULT_WEIGHT);
                recorder.node(t, after * (mp.r * (t - tau)).exp());
            }
            return (after * (mp.r * (maturity - tau)).exp(), tau);
        }

        let dt = t1 - t0;
        let z: f64 = bm.sample(StandardNormal);
        w *= ((growth - 0.5 * vol * vol) * dt + vol * dt.sqrt() * z).exp();
        recorder.interval_weight(pi);
        recorder.node(t1, w);
        pi_prev = pi;
    }

    if tau <= maturity {
        // tau == T exactly: the jump still applies at the terminal instant.
        let after = (1.0 - pi_prev) * w;
        recorder.default_event(DefaultEvent {
            time: tau,
            weight_before: pi_prev,
            wealth_before: w,
            wealth_after: after,
        });
        return (after, tau);
    }
    (w, f64::INFINITY)
}

fn sim_steps(maturity: f64, dt: f64) -> usize {
    ((maturity / dt).ceil() as usize).max(1)
}

fn validate_run(mp: &MarketParams, policy: &PolicyPath, horizon: &Horizon) -> Result<()> {
    let _ = mp;
    let maturity = horizon.maturity();
    if (policy.maturity() - maturity).abs() > 1e-12 * maturity.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "policy maturity {} does not match horizon maturity {}",
            policy.maturity(),
            maturity
        )));
    }
    Ok(())
}

/// Simulates `cfg.n_paths` wealth trajectories under the given pre-default
/// policy. `W_0 = 1` by convention; utility translations are the caller's
/// business.
pub fn simulate_wealth(
    mp: &MarketParams,
    policy: &PolicyPath,
    horizon: &Horizon,
    cfg: &SimConfig,
) -> Result<Vec<WealthTrajectory>> {
    validate_run(mp, policy, horizon)?;
    let maturity = horizon.maturity();
    let n_steps = sim_steps(maturity, cfg.dt);
    let trajectories: Vec<WealthTrajectory> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut rec = FullRecord {
                times: Vec::with_capacity(n_steps + 1),
                wealth: Vec::with_capacity(n_steps + 1),
                weights: Vec::with_capacity(n_steps),
                event: None,
            };
            let (_, tau) = simulate_path(mp, policy, maturity, n_steps, cfg.seed, path, &mut rec);
            WealthTrajectory {
                times: rec.times,
                wealth: rec.wealth,
                weights: rec.weights,
                tau,
                default_event: rec.event,
            }
        })
        .collect();
    Ok(trajectories)
}

/// Terminal wealth per path, in path-index order, without storing paths.
pub fn terminal_wealths(
    mp: &MarketParams,
    policy: &PolicyPath,
    horizon: &Horizon,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    validate_run(mp, policy, horizon)?;
    let maturity = horizon.maturity();
    let n_steps = sim_steps(maturity, cfg.dt);
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            simulate_path(mp, policy, maturity, n_steps, cfg.seed, path, &mut NoRecord).0
        })
        .collect())
}

/// Sample mean and standard error of `U(W_T)` over the trajectories.
/// A nonpositive terminal wealth reports a `-inf` objective: the strategy is
/// empirically inadmissible.
pub fn estimate_expected_utility(
    trajectories: &[WealthTrajectory],
    spec: &UtilitySpec,
) -> McEstimate {
    let terminals: Vec<f64> = trajectories.iter().map(|t| t.terminal_wealth()).collect();
    utility_estimate(&terminals, spec)
}

/// Fused simulate-and-estimate: expected utility of a policy without
/// retaining trajectories.
pub fn expected_utility_of_policy(
    mp: &MarketParams,
    policy: &PolicyPath,
    horizon: &Horizon,
    cfg: &SimConfig,
    spec: &UtilitySpec,
) -> Result<McEstimate> {
    let terminals = terminal_wealths(mp, policy, horizon, cfg)?;
    Ok(utility_estimate(&terminals, spec))
}

fn utility_estimate(terminals: &[f64], spec: &UtilitySpec) -> McEstimate {
    let n_paths = terminals.len();
    if terminals.iter().any(|&w| w <= 0.0) {
        return McEstimate { mean: f64::NEG_INFINITY, std_error: f64::INFINITY, n_paths };
    }
    let utilities: Vec<f64> =
        terminals.iter().map(|&w| spec.utility(w).expect("positive wealth")).collect();
    let (mean, std_error) = mean_and_stderr(&utilities);
    McEstimate { mean, std_error, n_paths }
}

/// `integral_0^dt lambda e^{-lambda (t0 + s)} (a + b s) ds`, in closed form.
fn exp_weighted_linear(lambda: f64, t0: f64, dt: f64, a: f64, b: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mass = -f64::exp_m1(-lambda * dt); // 1 - e^{-lambda dt}
    let first_moment = mass / lambda - dt * (-lambda * dt).exp();
    (-lambda * t0).exp() * (a * mass + b * first_moment)
}

/// Monte Carlo estimate of the reduced (default-free) log-utility objective
///
/// ```text
/// E[ integral_0^T lambda e^{-lambda t} log((1 - pi_t) X_t) dt ]
///   + E[ e^{-lambda T} log X_T ] + r (T - (1 - e^{-lambda T})/lambda)
/// ```
///
/// where `X` is the no-bankruptcy wealth process. The default time is gone
/// from the expectation. On each grid interval the integrand's weight and
/// drift terms are linear in time and integrated against the exponential
/// density in closed form, while the martingale part of `log X` enters via
/// its linear interpolant (the conditional mean of the Brownian bridge), so
/// the estimator is unbiased for piecewise-constant weights: an all-cash
/// policy reproduces `log w + r T` exactly with zero standard error.
pub fn reduced_objective_estimate(
    mp: &MarketParams,
    policy: &PolicyPath,
    horizon: &Horizon,
    cfg: &SimConfig,
) -> Result<McEstimate> {
    validate_run(mp, policy, horizon)?;
    let maturity = horizon.maturity();
    let n_steps = sim_steps(maturity, cfg.dt);
    let constant_term = mp.r * (maturity - exp_integral(mp.lambda, maturity));

    let values: Vec<f64> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut bm = substream(cfg.seed, path, STREAM_BROWNIAN);
            let grid_time = |k: usize| {
                if k == n_steps {
                    maturity
                } else {
                    maturity * k as f64 / n_steps as f64
                }
            };
            let mut log_x = 0.0f64; // log X_{t_k}; exact GBM accumulation
            let mut integral = 0.0f64;
            for k in 0..n_steps {
                let t0 = grid_time(k);
                let t1 = grid_time(k + 1);
                let pi = policy.weight_at(t0);
                let growth = mp.mu * pi + mp.r * (1.0 - pi);
                let vol = mp.sigma * pi;
                let dt = t1 - t0;
                let drift = (growth - 0.5 * vol * vol) * dt;
                let z: f64 = bm.sample(StandardNormal);
                let shock = vol * dt.sqrt() * z;
                // log((1 - pi) X_t) ~ a + b (t - t0) on [t0, t1] with the
                // bridge mean standing in for the within-step martingale.
                integral += exp_weighted_linear(
                    mp.lambda,
                    t0,
                    dt,
                    (1.0 - pi).ln() + log_x,
                    (drift + shock) / dt,
                );
                log_x += drift + shock;
            }
            integral + (-mp.lambda * maturity).exp() * log_x + constant_term
        })
        .collect();

    let (mean, std_error) = mean_and_stderr(&values);
    Ok(McEstimate { mean, std_error, n_paths: cfg.n_paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_policy::{log_value_function_pre, pre_default_ratio_log};
    use approx::assert_relative_eq;

    fn reference_params() -> MarketParams {
        MarketParams::new(0.4027, 0.5905, 0.0501, 0.024).unwrap()
    }

    #[test]
    fn all_cash_policy_is_exact() {
        let mp = reference_params();
        let horizon = Horizon::new(1.0, 10).unwrap();
        let policy = PolicyPath::constant(0.0, &horizon).unwrap();
        let cfg = SimConfig::new(200, 42, 0.1).unwrap();
        let trajectories = simulate_wealth(&mp, &policy, &horizon, &cfg).unwrap();
        for traj in &trajectories {
            for (&t, &w) in traj.times.iter().zip(&traj.wealth) {
                assert_relative_eq!(w, (mp.r * t).exp(), max_relative = 1e-12);
            }
        }
        let estimate = estimate_expected_utility(&trajectories, &UtilitySpec::log());
        assert_relative_eq!(estimate.mean, mp.r * 1.0, max_relative = 1e-12);
        assert!(estimate.std_error <= 1e-15, "se {}", estimate.std_error);
    }

    #[test]
    fn drift_only_limit() {
        let mp = MarketParams::new(0.12, 1e-12, 0.03, 0.0).unwrap();
        let horizon = Horizon::new(2.0, 10).unwrap();
        let policy = PolicyPath::constant(0.6, &horizon).unwrap();
        let cfg = SimConfig::new(16, 7, 0.25).unwrap();
        let expected = ((0.6 * mp.mu + 0.4 * mp.r) * 2.0).exp();
        for w in terminal_wealths(&mp, &policy, &horizon, &cfg).unwrap() {
            assert_relative_eq!(w, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn immediate_default_limit() {
        // lambda = 50/year: tau ~ 0 almost surely; terminal wealth
        // concentrates near 0.5 e^{rT}. Exact mean:
        // 0.5 e^{rT} E[e^{(m - r) tau} 1{tau <= T}] + e^{m T} P{tau > T}.
        let mp = MarketParams::new(0.10, 0.25, 0.04, 50.0).unwrap();
        let horizon = Horizon::new(1.0, 100).unwrap();
        let policy = PolicyPath::constant(0.5, &horizon).unwrap();
        let cfg = SimConfig::new(40_000, 3, 0.01).unwrap();
        let terminals = terminal_wealths(&mp, &policy, &horizon, &cfg).unwrap();
        let (mean, se) = crate::numeric::mean_and_stderr(&terminals);

        let growth = 0.5 * mp.mu + 0.5 * mp.r;
        let drift_gap = growth - mp.r;
        let lam = mp.lambda;
        let exact = 0.5
            * (mp.r * 1.0).exp()
            * (lam / (lam - drift_gap))
            * (1.0 - (-(lam - drift_gap) * 1.0).exp())
            + (growth * 1.0).exp() * (-lam * 1.0).exp();
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "mean {mean} vs exact {exact} (se {se})"
        );
        assert!((mean - 0.5 * mp.r.exp()).abs() < 0.02);
    }

    #[test]
    fn haircut_invariant_on_defaulted_paths() {
        let mp = MarketParams::new(0.10, 0.4, 0.02, 1.5).unwrap();
        let horizon = Horizon::new(1.0, 16).unwrap();
        let policy = PolicyPath::constant(0.7, &horizon).unwrap();
        let cfg = SimConfig::new(4000, 11, 1.0 / 16.0).unwrap();
        let trajectories = simulate_wealth(&mp, &policy, &horizon, &cfg).unwrap();
        let mut defaulted = 0;
        for traj in &trajectories {
            if let Some(event) = traj.default_event {
                defaulted += 1;
                assert!(traj.tau <= 1.0);
                let ratio = event.wealth_after / event.wealth_before;
                assert!(
                    (ratio - (1.0 - event.weight_before)).abs() <= 1e-12,
                    "haircut ratio {ratio}"
                );
            } else {
                assert!(traj.tau.is_infinite());
            }
        }
        // P{tau <= 1} = 1 - e^{-1.5} ~ 0.78.
        assert!(defaulted > 2500 && defaulted < 3700, "defaulted = {defaulted}");
    }

    #[test]
    fn seed_and_parallelism_determinism() {
        let mp = reference_params();
        let horizon = Horizon::new(1.0, 50).unwrap();
        let policy = PolicyPath::constant(0.5, &horizon).unwrap();
        let cfg = SimConfig::new(2000, 99, 0.02).unwrap();

        let first = terminal_wealths(&mp, &policy, &horizon, &cfg).unwrap();
        let second = terminal_wealths(&mp, &policy, &horizon, &cfg).unwrap();
        assert_eq!(first, second, "same seed must be bit-identical");

        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| terminal_wealths(&mp, &policy, &horizon, &cfg).unwrap());
        assert_eq!(first, serial, "thread count must not change results");

        let other = SimConfig::new(2000, 100, 0.02).unwrap();
        assert_ne!(first, terminal_wealths(&mp, &policy, &horizon, &other).unwrap());
    }

    #[test]
    fn reduced_objective_collapses_for_cash() {
        let mp = reference_params();
        let horizon = Horizon::new(1.0, 20).unwrap();
        let policy = PolicyPath::constant(0.0, &horizon).unwrap();
        let cfg = SimConfig::new(50, 5, 0.05).unwrap();
        let estimate = reduced_objective_estimate(&mp, &policy, &horizon, &cfg).unwrap();
        // X_t = e^{rt}: integral lambda e^{-lambda t} (r t) dt + e^{-lambda T} r T
        //   + r (T - (1-e^{-lambda T})/lambda) = r T exactly (after Fubini).
        assert!((estimate.mean - mp.r).abs() < 1e-12, "mean {}", estimate.mean);
        assert!(estimate.std_error <= 1e-15);

        // lambda = 0 reduces to E[log X_T].
        let mp0 = MarketParams::new(0.10, 0.3, 0.02, 0.0).unwrap();
        let policy6 = PolicyPath::constant(0.6, &horizon).unwrap();
        let cfg0 = SimConfig::new(20_000, 5, 0.05).unwrap();
        let reduced = reduced_objective_estimate(&mp0, &policy6, &horizon, &cfg0).unwrap();
        let expected = 0.6 * mp0.mu + 0.4 * mp0.r - 0.5 * mp0.variance() * 0.36;
        assert!(
            (reduced.mean - expected).abs() < 3.0 * reduced.std_error,
            "mean {} vs expected {expected}",
            reduced.mean
        );
    }

    #[test]
    fn fubini_identity_for_constant_policy() {
        let mp = reference_params();
        let horizon = Horizon::new(1.0, 100).unwrap();
        let policy = PolicyPath::constant(pre_default_ratio_log(&mp), &horizon).unwrap();
        let cfg = SimConfig::new(30_000, 42, 0.01).unwrap();
        let jump = expected_utility_of_policy(&mp, &policy, &horizon, &cfg, &UtilitySpec::log())
            .unwrap();
        let reduced = reduced_objective_estimate(&mp, &policy, &horizon, &cfg).unwrap();
        let gap = (jump.mean - reduced.mean).abs();
        let budget = 3.0 * (jump.std_error + reduced.std_error);
        assert!(gap <= budget, "gap {gap} exceeds {budget}");
    }

    #[test]
    fn mc_matches_closed_form_value() {
        let mp = reference_params();
        let horizon = Horizon::new(1.0, 100).unwrap();
        let pi = pre_default_ratio_log(&mp);
        let policy = PolicyPath::constant(pi, &horizon).unwrap();
        let cfg = SimConfig::new(50_000, 42, 0.01).unwrap();
        let estimate =
            expected_utility_of_policy(&mp, &policy, &horizon, &cfg, &UtilitySpec::log()).unwrap();
        let closed = log_value_function_pre(&mp, 1.0, 0.0, 1.0).unwrap();
        assert!(
            (estimate.mean - closed).abs() <= 3.0 * estimate.std_error,
            "MC {} vs closed form {closed} (se {})",
            estimate.mean,
            estimate.std_error
        );
    }

    #[test]
    fn nonpositive_terminal_wealth_reports_neg_infinity() {
        let traj = WealthTrajectory {
            times: vec![0.0, 1.0],
            wealth: vec![1.0, -0.5],
            weights: vec![1.2],
            tau: 0.5,
            default_event: None,
        };
        let estimate = estimate_expected_utility(&[traj], &UtilitySpec::log());
        assert_eq!(estimate.mean, f64::NEG_INFINITY);
        assert!(estimate.std_error.is_infinite());
    }

    #[test]
    fn mismatched_horizon_is_rejected() {
        let mp = reference_params();
        let horizon = Horizon::new(1.0, 10).unwrap();
        let other = Horizon::new(2.0, 10).unwrap();
        let policy = PolicyPath::constant(0.3, &horizon).unwrap();
        let cfg = SimConfig::new(10, 1, 0.1).unwrap();
        assert!(simulate_wealth(&mp, &policy, &other, &cfg).is_err());
        assert!(SimConfig::new(0, 1, 0.1).is_err());
        assert!(SimConfig::new(10, 1, 0.0).is_err());
    }
}
