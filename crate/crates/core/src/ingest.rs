//! Real-data pipeline: monthly price/return ingestion with missing-value
//! filtering, and the rolling train/test portfolio backtest.

use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{sample_covariance, thresholded_sample_cov, Method};
use crate::gmvp::{gmvp_ensemble, gmvp_weights, mean_weights, realized_portfolio_sd};
use crate::ppp::{generate_ppp_ensemble, ThresholdConfig};
use crate::returns::ReturnsMatrix;
use crate::rng::RngStream;
use crate::sampling::default_prior;
use crate::simbench::thres_weights_with_fallback;
use crate::tuning::{cv_select, CvEstimator, CvObjective, CvSettings, PriorSpec};

const STREAM_WINDOW: u64 = 1;
const STREAM_METHOD_CV: u64 = 2;
const STREAM_METHOD_DRAWS: u64 = 3;

/// Input layout: a returns table is used as-is, a price table is converted
/// to per-period returns (dropping the first row).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnsFormat {
    ReturnsCsv,
    PricesCsv,
}

impl std::str::FromStr for ReturnsFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "returns-csv" | "returns" => Ok(ReturnsFormat::ReturnsCsv),
            "prices-csv" | "prices" => Ok(ReturnsFormat::PricesCsv),
            other => Err(format!(
                "unknown format '{other}' (expected returns-csv or prices-csv)"
            )),
        }
    }
}

/// How a price series is turned into returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReturnKind {
    /// `p_t / p_(t-1) - 1`
    Simple,
    /// `ln(p_t / p_(t-1))`
    Log,
}

fn is_missing_token(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty()
        || t.eq_ignore_ascii_case("na")
        || t.eq_ignore_ascii_case("nan")
        || t.eq_ignore_ascii_case("n/a")
        || t.eq_ignore_ascii_case("null")
}

/// Load a labeled CSV (header row of asset ids, first column of period ids)
/// into a complete returns matrix. Any asset column containing a missing
/// cell -- or, for prices, a non-positive price -- is dropped entirely.
pub fn load_returns(
    path: impl AsRef<Path>,
    format: ReturnsFormat,
    kind: ReturnKind,
) -> Result<ReturnsMatrix> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path_str.clone(),
            source,
        })?;

    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path_str.clone(),
            source,
        })?
        .clone();
    if headers.len() < 2 {
        return Err(Error::BadFile {
            path: path_str,
            message: "expected a period-id column followed by at least one asset column".into(),
        });
    }
    let asset_ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let n_assets = asset_ids.len();

    let mut period_ids: Vec<String> = Vec::new();
    let mut grid: Vec<Option<f64>> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path_str.clone(),
            source,
        })?;
        if record.len() != n_assets + 1 {
            return Err(Error::BadFile {
                path: path_str,
                message: format!(
                    "row {} has {} fields, expected {}",
                    row_idx + 2,
                    record.len(),
                    n_assets + 1
                ),
            });
        }
        period_ids.push(record[0].to_string());
        for (col, cell) in record.iter().skip(1).enumerate() {
            if is_missing_token(cell) {
                grid.push(None);
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::ParseCell {
                path: path_str.clone(),
                row: row_idx + 2,
                col: col + 2,
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::ParseCell {
                    path: path_str.clone(),
                    row: row_idx + 2,
                    col: col + 2,
                    message: "value is not finite".into(),
                });
            }
            // A non-positive price has no usable return; treat it like a gap.
            if format == ReturnsFormat::PricesCsv && value <= 0.0 {
                grid.push(None);
            } else {
                grid.push(Some(value));
            }
        }
    }
    let n_raw = period_ids.len();
    let min_rows = match format {
        ReturnsFormat::ReturnsCsv => 1,
        ReturnsFormat::PricesCsv => 2,
    };
    if n_raw < min_rows {
        return Err(Error::BadFile {
            path: path_str,
            message: format!("needs at least {min_rows} data rows, found {n_raw}"),
        });
    }

    let keep: Vec<usize> = (0..n_assets)
        .filter(|&j| (0..n_raw).all(|t| grid[t * n_assets + j].is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::BadFile {
            path: path_str,
            message: "no asset column is free of missing values".into(),
        });
    }
    let kept_ids: Vec<String> = keep.iter().map(|&j| asset_ids[j].clone()).collect();

    match format {
        ReturnsFormat::ReturnsCsv => {
            let mut values = Vec::with_capacity(n_raw * keep.len());
            for t in 0..n_raw {
                for &j in &keep {
                    values.push(grid[t * n_assets + j].expect("filtered"));
                }
            }
            ReturnsMatrix::new(values, kept_ids, period_ids)
        }
        ReturnsFormat::PricesCsv => {
            let mut values = Vec::with_capacity((n_raw - 1) * keep.len());
            for t in 1..n_raw {
                for &j in &keep {
                    let prev = grid[(t - 1) * n_assets + j].expect("filtered");
                    let cur = grid[t * n_assets + j].expect("filtered");
                    values.push(match kind {
                        ReturnKind::Simple => cur / prev - 1.0,
                        ReturnKind::Log => (cur / prev).ln(),
                    });
                }
            }
            ReturnsMatrix::new(values, kept_ids, period_ids.split_off(1))
        }
    }
}

/// Rolling-window backtest scheme: train on `window_train` consecutive rows
/// ending at a sampled index, test on the following `window_test` rows.
#[derive(Debug, Clone)]
pub struct BacktestPlan {
    pub window_train: usize,
    pub window_test: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for BacktestPlan {
    fn default() -> Self {
        BacktestPlan {
            window_train: 48,
            window_test: 12,
            iterations: 20,
            seed: 0,
        }
    }
}

impl BacktestPlan {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.window_train == 0 || self.window_test < 2 {
            return Err(Error::invalid(
                "train window must be positive and test window at least 2",
            ));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if self.window_train + self.window_test > n {
            return Err(Error::invalid(format!(
                "data has {n} rows; train {} + test {} does not fit",
                self.window_train, self.window_test
            )));
        }
        Ok(())
    }
}

/// Sample the split index for one iteration and return the 0-based train and
/// test row ranges plus the 1-based index `i` itself. The index is drawn
/// uniformly from `window_train ..= n - window_test` (duplicates across
/// iterations are allowed), keyed by the iteration substream.
pub fn rolling_split(
    n: usize,
    plan: &BacktestPlan,
    iteration: usize,
) -> Result<(Range<usize>, Range<usize>, usize)> {
    plan.validate(n)?;
    let lo = plan.window_train;
    let hi = n - plan.window_test;
    let mut rng = RngStream::new(plan.seed)
        .substream(STREAM_WINDOW)
        .substream(iteration as u64)
        .rng();
    let i = rng.random_range(lo..=hi);
    Ok(((i - plan.window_train)..i, i..(i + plan.window_test), i))
}

/// What happened to one method in one backtest window.
#[derive(Debug, Clone)]
pub struct WindowOutcome {
    pub iteration: usize,
    pub split_index: usize,
    pub realized_sd: Option<f64>,
    pub error: Option<String>,
}

/// Backtest summary for one method.
#[derive(Debug, Clone)]
pub struct MethodBacktest {
    pub method: Method,
    pub mean_realized_sd: Option<f64>,
    pub windows_used: usize,
    pub windows: Vec<WindowOutcome>,
}

/// Backtest report across methods.
#[derive(Debug, Clone)]
pub struct BacktestReport {
    pub methods: Vec<MethodBacktest>,
    pub iterations: usize,
}

/// Knobs for the estimators inside a backtest window.
#[derive(Debug, Clone)]
pub struct BacktestSettings {
    /// Ensemble size for the Bayesian methods' final fit per window.
    pub n_draws: usize,
    /// Cross-validation scheme for the threshold multiplier.
    pub cv: CvSettings,
    /// Subtract column means when fitting (real returns are not zero-mean).
    pub demean: bool,
}

impl Default for BacktestSettings {
    fn default() -> Self {
        BacktestSettings {
            n_draws: 2000,
            cv: CvSettings::default(),
            demean: true,
        }
    }
}

/// Run the rolling backtest: per iteration and method, fit on the train
/// window (with per-window tuning for the thresholded methods), form minimum
/// variance weights, and record the realized SD on the test window. Window
/// failures are recorded and excluded from the mean, never silently averaged.
pub fn run_backtest(
    data: &ReturnsMatrix,
    plan: &BacktestPlan,
    methods: &[Method],
    settings: &BacktestSettings,
) -> Result<BacktestReport> {
    plan.validate(data.n_rows())?;
    let n = data.n_rows();

    let windows: Vec<(usize, Range<usize>, Range<usize>, usize)> = (0..plan.iterations)
        .map(|it| {
            let (train, test, i) = rolling_split(n, plan, it)?;
            Ok((it, train, test, i))
        })
        .collect::<Result<_>>()?;

    let per_window: Vec<Vec<WindowOutcome>> = windows
        .par_iter()
        .map(|(it, train_range, test_range, split_index)| {
            let train = data.window(train_range.clone())?;
            let test = data.window(test_range.clone())?;
            let root = RngStream::new(plan.seed);
            methods
                .iter()
                .map(|&method| {
                    let sd = window_method_sd(
                        &train,
                        &test,
                        method,
                        settings,
                        root.substream(STREAM_METHOD_CV)
                            .substream(*it as u64)
                            .substream(method_tag(method)),
                        root.substream(STREAM_METHOD_DRAWS)
                            .substream(*it as u64)
                            .substream(method_tag(method)),
                    );
                    Ok(match sd {
                        Ok(v) => WindowOutcome {
                            iteration: *it,
                            split_index: *split_index,
                            realized_sd: Some(v),
                            error: None,
                        },
                        Err(Error::NotPositiveDefinite { .. }) => WindowOutcome {
                            iteration: *it,
                            split_index: *split_index,
                            realized_sd: None,
                            error: Some(
                                "covariance estimate singular; portfolio infeasible".into(),
                            ),
                        },
                        Err(e) => return Err(e.with_context(format!("{method} window {it}"))),
                    })
                })
                .collect::<Result<Vec<WindowOutcome>>>()
        })
        .collect::<Result<_>>()?;

    let mut report = Vec::with_capacity(methods.len());
    for (mi, &method) in methods.iter().enumerate() {
        let windows: Vec<WindowOutcome> = per_window.iter().map(|row| row[mi].clone()).collect();
        let used: Vec<f64> = windows.iter().filter_map(|w| w.realized_sd).collect();
        report.push(MethodBacktest {
            method,
            mean_realized_sd: if used.is_empty() {
                None
            } else {
                Some(used.iter().sum::<f64>() / used.len() as f64)
            },
            windows_used: used.len(),
            windows,
        });
    }
    Ok(BacktestReport {
        methods: report,
        iterations: plan.iterations,
    })
}

fn method_tag(method: Method) -> u64 {
    match method {
        Method::Ppp => 1,
        Method::Iw => 2,
        Method::Thres => 3,
        Method::SampleCov => 4,
    }
}

fn window_method_sd(
    train: &ReturnsMatrix,
    test: &ReturnsMatrix,
    method: Method,
    settings: &BacktestSettings,
    cv_stream: RngStream,
    draw_stream: RngStream,
) -> Result<f64> {
    let demean = settings.demean;
    let n_train = train.n_rows();
    let p = train.n_cols();
    match method {
        Method::SampleCov => {
            let s = sample_covariance(train, demean)?;
            let w = gmvp_weights(&s)?;
            realized_portfolio_sd(&w, test)
        }
        Method::Thres => {
            let estimator = CvEstimator::ThresholdedSampleCov { demean };
            let plan = settings.cv.plan(
                train,
                demean,
                CvObjective::GmvpVariance,
                cv_stream.derive_seed(),
            )?;
            let cfg = cv_select(train, &estimator, &plan)?.best;
            let est = thresholded_sample_cov(train, &cfg, demean)?;
            let (w, _fallback) = thres_weights_with_fallback(est.matrix())?;
            realized_portfolio_sd(&w, test)
        }
        Method::Iw => {
            let prior = default_prior(train, demean)?;
            let cfg = ThresholdConfig::new(0.0, 0.0, n_train, p)?;
            let ensemble =
                generate_ppp_ensemble(&prior, train, &cfg, settings.n_draws, draw_stream, demean)?;
            let w = mean_weights(&gmvp_ensemble(&ensemble)?)?;
            realized_portfolio_sd(&w, test)
        }
        Method::Ppp => {
            let estimator = CvEstimator::PppPosterior {
                prior: PriorSpec::EmpiricalDefault,
                n_draws: settings.cv.n_draws,
                demean,
            };
            let plan = settings.cv.plan(
                train,
                demean,
                CvObjective::GmvpVariance,
                cv_stream.derive_seed(),
            )?;
            let cfg = cv_select(train, &estimator, &plan)?.best;
            let prior = default_prior(train, demean)?;
            // Stream the draws: at a few hundred assets a full ensemble of
            // matrices would not fit comfortably in memory.
            let ws = crate::ppp::map_ppp_draws(
                &prior,
                train,
                &cfg,
                settings.n_draws,
                draw_stream,
                demean,
                |_, draw| gmvp_weights(&draw),
            )?;
            let w = mean_weights(&ws)?;
            realized_portfolio_sd(&w, test)
        }
    }
}
