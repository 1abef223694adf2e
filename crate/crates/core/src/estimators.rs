//! Frequentist comparison estimators: the sample covariance and its
//! hard-thresholded variant.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::CovMatrix;
use crate::ppp::{hard_threshold, ThresholdConfig};
use crate::returns::ReturnsMatrix;

/// Estimation methods compared in the experiment tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Ppp,
    Iw,
    Thres,
    SampleCov,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ppp, Method::Iw, Method::Thres, Method::SampleCov];

    /// Row label used in the emitted tables.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Ppp => "PPP",
            Method::Iw => "IW",
            Method::Thres => "Thres",
            Method::SampleCov => "Sample cov",
        }
    }

    pub fn is_bayesian(&self) -> bool {
        matches!(self, Method::Ppp | Method::Iw)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Ppp => "ppp",
            Method::Iw => "iw",
            Method::Thres => "thres",
            Method::SampleCov => "samplecov",
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ppp" => Ok(Method::Ppp),
            "iw" => Ok(Method::Iw),
            "thres" => Ok(Method::Thres),
            "samplecov" | "sample-cov" | "sample_cov" => Ok(Method::SampleCov),
            other => Err(format!(
                "unknown method '{other}' (expected ppp, iw, thres or samplecov)"
            )),
        }
    }
}

/// Tag identifying which estimator produced a point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateTag {
    PppMean,
    IwMean,
    Thres,
    SampleCov,
}

/// A covariance point estimate with its provenance.
#[derive(Debug, Clone)]
pub struct PointEstimate {
    matrix: CovMatrix,
    tag: EstimateTag,
    config: Option<ThresholdConfig>,
}

impl PointEstimate {
    pub fn new(
        matrix: CovMatrix,
        tag: EstimateTag,
        config: Option<ThresholdConfig>,
    ) -> Result<Self> {
        if tag == EstimateTag::Thres && config.is_none() {
            return Err(Error::invalid(
                "thresholded estimates must carry their threshold configuration",
            ));
        }
        Ok(PointEstimate {
            matrix,
            tag,
            config,
        })
    }

    pub fn matrix(&self) -> &CovMatrix {
        &self.matrix
    }

    pub fn tag(&self) -> EstimateTag {
        self.tag
    }

    pub fn config(&self) -> Option<&ThresholdConfig> {
        self.config.as_ref()
    }
}

/// Sum of outer products `sum_i x_i x_i^T`, optionally after subtracting
/// column means. Equals `n * S_n` with divisor-n conventions.
pub(crate) fn scatter_matrix(data: &ReturnsMatrix, demean: bool) -> CovMatrix {
    let p = data.n_cols();
    let n = data.n_rows();
    let means = if demean {
        data.column_means()
    } else {
        vec![0.0; p]
    };
    let mut packed = vec![0.0; p * (p + 1) / 2];
    for t in 0..n {
        let row = data.row(t);
        let mut idx = 0;
        for i in 0..p {
            let xi = row[i] - means[i];
            for j in 0..=i {
                packed[idx] += xi * (row[j] - means[j]);
                idx += 1;
            }
        }
    }
    CovMatrix::from_lower(p, packed).expect("scatter of finite data is finite")
}

/// Sample covariance `S_n = n^-1 sum x_i x_i^T`, or the centered variant with
/// the same divisor `n` when `demean` is set. PSD by construction.
pub fn sample_covariance(data: &ReturnsMatrix, demean: bool) -> Result<CovMatrix> {
    if data.n_rows() == 0 {
        return Err(Error::invalid("sample covariance needs at least one row"));
    }
    scatter_matrix(data, demean).scale(1.0 / data.n_rows() as f64)
}

/// Hard-thresholded sample covariance. The raw thresholded matrix is kept
/// as-is (no positive-definite adjustment).
pub fn thresholded_sample_cov(
    data: &ReturnsMatrix,
    cfg: &ThresholdConfig,
    demean: bool,
) -> Result<PointEstimate> {
    let s = sample_covariance(data, demean)?;
    let thresholded = hard_threshold(&s, cfg)?;
    PointEstimate::new(thresholded, EstimateTag::Thres, Some(cfg.clone()))
}
