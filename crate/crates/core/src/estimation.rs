//! Drift/volatility estimation from daily closing prices, and the
//! end-to-end allocation report built on top of it.
//!
//! From log-differenced returns `X_i = log(S_{t_{i+1}}) - log(S_{t_i})` the
//! annualized estimates are
//!
//! ```text
//! mu_hat    = (n_trade / n) sum X_i
//! sigma_hat = sqrt(n_trade) * ( sum X_i^2 / (n-1) - n/(n-1) Xbar^2 )^{1/2}
//! ```
//!
//! with `n_trade = 252` trading days by default. Note `mu_hat` is the
//! annualized *log* drift and is plugged directly into the GBM drift `mu`
//! without a `sigma^2/2` correction; that is deliberate and matched by the
//! allocation report.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::log_policy::{classical_merton_ratio, pre_default_ratio_log};
use crate::model::MarketParams;
use crate::numeric::CompensatedSum;
use crate::power_policy::{terminal_linearization, GAMMA_POWER_GUARD};

/// Trading days per year used for annualization unless overridden.
pub const DEFAULT_TRADING_DAYS: u32 = 252;

/// Daily closing prices with their calendar dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::Ingestion(format!(
                "dates ({}) and closes ({}) must have equal length",
                dates.len(),
                closes.len()
            )));
        }
        if closes.len() < 2 {
            return Err(Error::Ingestion("need at least two prices".into()));
        }
        if !dates.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Ingestion("dates must be strictly ascending".into()));
        }
        if let Some(bad) = closes.iter().find(|&&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::Ingestion(format!("nonpositive close {bad}")));
        }
        Ok(Self { dates, closes })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// What the CSV reader skipped on the way in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    /// Rows dropped because the date or close failed to parse, or the close
    /// was nonpositive. Counted, warned about, never fatal.
    pub rows_skipped: usize,
}

/// Reads a price CSV: a header row naming `date` (ISO-8601) and `close`
/// (decimal) columns, extra columns ignored, column names matched
/// case-insensitively. Unparseable rows are skipped and counted.
pub fn read_price_csv<R: Read>(reader: R) -> Result<(PriceSeries, IngestStats)> {
    let mut csv_reader = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let date_col = find("date").ok_or_else(|| {
        Error::Ingestion("CSV needs a `date` column (header row: date,close)".into())
    })?;
    let close_col = find("close").ok_or_else(|| {
        Error::Ingestion("CSV needs a `close` column (header row: date,close)".into())
    })?;

    let mut dates = Vec::new();
    let mut closes = Vec::new();
    let mut stats = IngestStats::default();
    for record in csv_reader.records() {
        let record = record?;
        let parsed = (|| {
            let date = NaiveDate::parse_from_str(record.get(date_col)?.trim(), "%Y-%m-%d").ok()?;
            let close: f64 = record.get(close_col)?.trim().parse().ok()?;
            if close > 0.0 && close.is_finite() {
                Some((date, close))
            } else {
                None
            }
        })();
        match parsed {
            Some((date, close)) => {
                dates.push(date);
                closes.push(close);
            }
            None => stats.rows_skipped += 1,
        }
    }
    let series = PriceSeries::new(dates, closes)?;
    Ok((series, stats))
}

/// Log-differenced returns `X_i = log(S_{t_{i+1}}) - log(S_{t_i})`.
pub fn log_returns(series: &PriceSeries) -> Vec<f64> {
    series.closes.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

/// Annualized drift and volatility estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    /// Number of returns.
    pub n: usize,
    /// Annualization constant (trading days per year).
    pub trading_days: u32,
    /// True when a degenerate sample produced a negative variance estimate
    /// that was clamped to zero.
    pub variance_clamped: bool,
}

/// Maximum-likelihood style estimates from daily log returns.
pub fn estimate_params(returns: &[f64], trading_days: u32) -> Result<EstimationResult> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::Ingestion(format!("need at least 2 returns, got {n}")));
    }
    if trading_days == 0 {
        return Err(Error::InvalidParameter("trading_days must be >= 1".into()));
    }
    let n_f = n as f64;
    let n_trade = trading_days as f64;

    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for &x in returns {
        sum.add(x);
        sum_sq.add(x * x);
    }
    let total = sum.total();
    let mean = total / n_f;
    let mu_hat = n_trade / n_f * total;

    let mut variance_daily = sum_sq.total() / (n_f - 1.0) - n_f / (n_f - 1.0) * mean * mean;
    let variance_clamped = variance_daily < 0.0;
    if variance_clamped {
        variance_daily = 0.0;
    }
    let sigma_hat = n_trade.sqrt() * variance_daily.sqrt();
    Ok(EstimationResult { mu_hat, sigma_hat, n, trading_days, variance_clamped })
}

/// One power-utility row of the allocation report: terminal weight and the
/// small-maturity linearization `pi_t ~ pi_T - slope (T - t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub gamma: f64,
    pub pi_terminal: f64,
    pub linear_slope: f64,
}

/// Full allocation report: estimates, the market parameters they induce, the
/// log-utility ratios, and one row per requested power-utility `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationReport {
    pub estimate: EstimationResult,
    pub ingest: IngestStats,
    pub params: MarketParams,
    /// Classical ratio `(mu - r)/sigma^2` (log utility, no default risk).
    pub classical_log: f64,
    /// Pre-default weight under log utility.
    pub pi_pre_log: f64,
    /// Post-default weight, identically zero.
    pub pi_post: f64,
    pub power_rows: Vec<PowerRow>,
}

/// Ingests a price CSV and produces the allocation report. `r` and `lambda`
/// come from the caller (the default intensity is an external rating-table
/// input, not estimated from prices). `gammas` selects the power-utility
/// rows; values within the log guard of 1 report the constant log-utility
/// weight with slope 0.
pub fn full_pipeline<R: Read>(
    reader: R,
    r: f64,
    lambda: f64,
    gammas: &[f64],
) -> Result<AllocationReport> {
    let (series, ingest) = read_price_csv(reader)?;
    let returns = log_returns(&series);
    let estimate = estimate_params(&returns, DEFAULT_TRADING_DAYS)?;
    report_from_estimate(estimate, ingest, r, lambda, gammas)
}

/// Report assembly once estimates are known; shared with the CLI so that
/// directly supplied parameters take the same code path.
pub fn report_from_estimate(
    estimate: EstimationResult,
    ingest: IngestStats,
    r: f64,
    lambda: f64,
    gammas: &[f64],
) -> Result<AllocationReport> {
    let params = MarketParams::new(estimate.mu_hat, estimate.sigma_hat, r, lambda)?;
    let classical_log = classical_merton_ratio(&params, 1.0);
    let pi_pre_log = pre_default_ratio_log(&params);
    let mut power_rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        if (gamma - 1.0).abs() < GAMMA_POWER_GUARD {
            power_rows.push(PowerRow { gamma, pi_terminal: pi_pre_log, linear_slope: 0.0 });
        } else {
            let (pi_terminal, linear_slope) = terminal_linearization(&params, gamma)?;
            power_rows.push(PowerRow { gamma, pi_terminal, linear_slope });
        }
    }
    Ok(AllocationReport {
        estimate,
        ingest,
        params,
        classical_log,
        pi_pre_log,
        pi_post: 0.0,
        power_rows,
    })
}
