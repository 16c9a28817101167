//! Report types emitted by the commands, with JSON and CSV rendering.
//!
//! Numbers are rounded to a requested count of significant digits before
//! serialization (default 6, `--precision 17` round-trips f64 exactly), and
//! every rendering is deterministic: identical flags and seed produce
//! byte-identical output.

use merton_default::estimation::{EstimationResult, IngestStats};
use merton_default::model::MarketParams;
use merton_default::power_policy::PsiCheck;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RatioReport {
    pub command: &'static str,
    pub params: MarketParams,
    /// `(mu - r)/sigma^2`: the classical log-utility ratio.
    pub classical_ratio: f64,
    /// Optimal pre-default weight with default risk.
    pub pre_default_ratio: f64,
    pub post_default_weight: f64,
    pub lambda_sweep: Vec<SweepPoint>,
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub lambda: f64,
    pub pre_default_ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct PathReport {
    pub command: &'static str,
    pub params: MarketParams,
    pub maturity: f64,
    pub n_steps: usize,
    pub series: Vec<PathSeries>,
}

#[derive(Debug, Serialize)]
pub struct PathSeries {
    pub gamma: f64,
    /// `log` for the constant closed-form line, `power` for the integrated
    /// non-myopic path.
    pub kind: &'static str,
    /// Present when a near-1 gamma was routed to the log closed form.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub pi_terminal: f64,
    /// Slope of the linearization `pi_t ~ pi_T - slope (T - t)`.
    pub linear_slope: f64,
    pub psi_check: PsiSummary,
    pub points: Vec<PathPoint>,
}

#[derive(Debug, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub weight: f64,
    pub linearized: f64,
}

/// Flattened [`PsiCheck`] for serialization.
#[derive(Debug, Serialize)]
pub struct PsiSummary {
    pub available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_relative_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl PsiSummary {
    pub fn not_applicable(reason: &str) -> Self {
        Self { available: false, max_relative_defect: None, reason: Some(reason.into()) }
    }
}

impl From<PsiCheck> for PsiSummary {
    fn from(check: PsiCheck) -> Self {
        match check {
            PsiCheck::Defect { max_relative_defect } => Self {
                available: true,
                max_relative_defect: Some(max_relative_defect),
                reason: None,
            },
            PsiCheck::Unavailable { reason } => {
                Self { available: false, max_relative_defect: None, reason: Some(reason) }
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ValueReport {
    pub command: &'static str,
    pub params: MarketParams,
    pub gamma: f64,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub maturity: f64,
    pub wealth: f64,
    /// Pre-default weight (log) or terminal weight (power).
    pub pi_reference: f64,
    /// Drift constant `C*` for the log branch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    pub points: Vec<ValuePoint>,
}

#[derive(Debug, Serialize)]
pub struct ValuePoint {
    pub t: f64,
    /// Weight in force at `t` (constant for log).
    pub weight: f64,
    /// Conditional pre-default value (maximization form).
    pub value_pre: f64,
    /// Reduced minimization-form value (log branch only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_reduced: Option<f64>,
    /// Post-default conditional value at the same wealth.
    pub value_post: f64,
    /// Total-probability mixture of pre and post values.
    pub value_mixture: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub command: &'static str,
    pub params: MarketParams,
    pub maturity: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub grid_study: GridStudy,
    pub fubini_check: FubiniCheck,
    pub value_check: ValueCheck,
    pub all_pass: bool,
}

#[derive(Debug, Serialize)]
pub struct GridStudy {
    pub entries: Vec<GridEntry>,
    /// Grid weight with the highest estimated utility (admissible only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_pi: Option<f64>,
    /// Theoretical optimum the argmax is compared against.
    pub pi_pre: f64,
    /// Argmax lands within one grid step of the optimum.
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct GridEntry {
    pub pi: f64,
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct FubiniCheck {
    /// Weight of the constant policy both estimators price.
    pub pi: f64,
    pub jump_mean: f64,
    pub jump_std_error: f64,
    pub reduced_mean: f64,
    pub reduced_std_error: f64,
    pub gap: f64,
    /// `3 (se_jump + se_reduced)`.
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ValueCheck {
    pub pi: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    /// Analytic `E[log W_T]` for the constant policy.
    pub expected: f64,
    /// Optimal value function at `t = 0`, when the tested weight is optimal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_value: Option<f64>,
    pub gap: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct EstimateReport {
    pub command: &'static str,
    pub data: String,
    pub estimate: EstimationResult,
    pub ingest: IngestStats,
}

#[derive(Debug, Serialize)]
pub struct ReproduceReport {
    pub command: &'static str,
    pub data: String,
    pub r: f64,
    pub lambda: f64,
    pub sigma_scale: f64,
    pub estimate: EstimationResult,
    pub ingest: IngestStats,
    pub params: MarketParams,
    pub cells: Vec<Cell>,
    /// True when every cell with a reference expectation passed.
    pub all_pass: bool,
}

/// One reproduced table cell compared against its reference value, when one
/// exists for the requested inputs.
#[derive(Debug, Serialize)]
pub struct Cell {
    pub name: String,
    pub computed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Cell {
    pub fn checked(name: impl Into<String>, computed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            computed,
            expected: Some(expected),
            tolerance: Some(tolerance),
            pass: Some((computed - expected).abs() <= tolerance),
        }
    }

    pub fn unchecked(name: impl Into<String>, computed: f64) -> Self {
        Self { name: name.into(), computed, expected: None, tolerance: None, pass: None }
    }
}

/// All reports a command can produce.
#[derive(Debug)]
pub enum Report {
    Ratio(RatioReport),
    Path(PathReport),
    Value(ValueReport),
    Simulate(SimulateReport),
    Estimate(EstimateReport),
    Reproduce(ReproduceReport),
}

/// Rounds `v` to `digits` significant digits (deterministically, via the
/// exponential formatting round-trip).
pub fn round_sig(v: f64, digits: u8) -> f64 {
    if v == 0.0 || !v.is_finite() || digits >= 17 {
        return v;
    }
    format!("{:.*e}", digits as usize - 1, v).parse().expect("formatted float parses")
}

fn round_json_numbers(value: &mut serde_json::Value, digits: u8) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                let rounded = round_sig(n.as_f64().expect("checked"), digits);
                if let Some(new) = serde_json::Number::from_f64(rounded) {
                    *n = new;
                }
            }
        }
        serde_json::Value::Array(items) => {
            for item in items {
                round_json_numbers(item, digits);
            }
        }
        serde_json::Value::Object(map) => {
            for (_, item) in map.iter_mut() {
                round_json_numbers(item, digits);
            }
        }
        _ => {}
    }
}

fn fmt(v: f64, digits: u8) -> String {
    format!("{}", round_sig(v, digits))
}

fn fmt_opt(v: Option<f64>, digits: u8) -> String {
    v.map(|x| fmt(x, digits)).unwrap_or_default()
}

impl Report {
    pub fn to_json(&self, digits: u8) -> String {
        let mut value = match self {
            Report::Ratio(r) => serde_json::to_value(r),
            Report::Path(r) => serde_json::to_value(r),
            Report::Value(r) => serde_json::to_value(r),
            Report::Simulate(r) => serde_json::to_value(r),
            Report::Estimate(r) => serde_json::to_value(r),
            Report::Reproduce(r) => serde_json::to_value(r),
        }
        .expect("reports serialize");
        round_json_numbers(&mut value, digits);
        let mut text = serde_json::to_string_pretty(&value).expect("JSON renders");
        text.push('\n');
        text
    }

    /// A single rectangular table per command: the command's primary series
    /// (plot-ready), scalar context repeated per row where useful. The full
    /// report shape is only available as JSON.
    pub fn to_csv(&self, digits: u8) -> String {
        let mut out = String::new();
        let mut push_row = |cells: &[String]| {
            out.push_str(&cells.join(","));
            out.push('\n');
        };
        match self {
            Report::Ratio(r) => {
                push_row(&["lambda", "pre_default_ratio", "classical_ratio"].map(String::from));
                for p in &r.lambda_sweep {
                    push_row(&[
                        fmt(p.lambda, digits),
                        fmt(p.pre_default_ratio, digits),
                        fmt(r.classical_ratio, digits),
                    ]);
                }
            }
            Report::Path(r) => {
                push_row(&["gamma", "t", "weight", "linearized"].map(String::from));
                for s in &r.series {
                    for p in &s.points {
                        push_row(&[
                            fmt(s.gamma, digits),
                            fmt(p.t, digits),
                            fmt(p.weight, digits),
                            fmt(p.linearized, digits),
                        ]);
                    }
                }
            }
            Report::Value(r) => {
                push_row(
                    &["t", "weight", "value_pre", "value_reduced", "value_post", "value_mixture"]
                        .map(String::from),
                );
                for p in &r.points {
                    push_row(&[
                        fmt(p.t, digits),
                        fmt(p.weight, digits),
                        fmt(p.value_pre, digits),
                        fmt_opt(p.value_reduced, digits),
                        fmt(p.value_post, digits),
                        fmt(p.value_mixture, digits),
                    ]);
                }
            }
            Report::Simulate(r) => {
                push_row(&["pi", "admissible", "mean", "std_error"].map(String::from));
                for e in &r.grid_study.entries {
                    push_row(&[
                        fmt(e.pi, digits),
                        e.admissible.to_string(),
                        fmt_opt(e.mean, digits),
                        fmt_opt(e.std_error, digits),
                    ]);
                }
            }
            Report::Estimate(r) => {
                push_row(
                    &["mu_hat", "sigma_hat", "n", "trading_days", "rows_skipped"]
                        .map(String::from),
                );
                push_row(&[
                    fmt(r.estimate.mu_hat, digits),
                    fmt(r.estimate.sigma_hat, digits),
                    r.estimate.n.to_string(),
                    r.estimate.trading_days.to_string(),
                    r.ingest.rows_skipped.to_string(),
                ]);
            }
            Report::Reproduce(r) => {
                push_row(&["name", "computed", "expected", "tolerance", "pass"].map(String::from));
                for c in &r.cells {
                    push_row(&[
                        c.name.clone(),
                        fmt(c.computed, digits),
                        fmt_opt(c.expected, digits),
                        fmt_opt(c.tolerance, digits),
                        c.pass.map(|b| b.to_string()).unwrap_or_default(),
                    ]);
                }
            }
        }
        out
    }
}
