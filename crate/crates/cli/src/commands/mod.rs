pub mod backtest;
pub mod estimate;
pub mod gmvp;
pub mod simulate;
pub mod tables;
pub mod tune;

use anyhow::Result;
use covppp::ingest::{load_returns, ReturnKind, ReturnsFormat};
use covppp::ReturnsMatrix;
use std::path::Path;

pub(crate) fn load_data(
    path: &Path,
    format: ReturnsFormat,
    kind: ReturnKind,
) -> Result<ReturnsMatrix> {
    Ok(load_returns(path, format, kind)?)
}

pub(crate) fn parse_return_kind(s: &str) -> Result<ReturnKind, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "simple" => Ok(ReturnKind::Simple),
        "log" => Ok(ReturnKind::Log),
        other => Err(format!(
            "unknown return kind '{other}' (expected simple or log)"
        )),
    }
}
