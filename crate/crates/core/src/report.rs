//! CSV emission for experiment results: the three method-by-sample-size
//! summary tables, per-replication raw results, credible-interval plot data,
//! and cross-validation score tables.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ensemble_io::fmt_f64;
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::gmvp::{IntervalSummary, PortfolioWeights};
use crate::simbench::{CellResult, ExperimentResults};
use crate::tuning::CvResult;

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

fn write_line(out: &mut BufWriter<File>, path: &Path, line: &str) -> Result<()> {
    out.write_all(line.as_bytes())
        .and_then(|()| out.write_all(b"\n"))
        .map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Rows of the published tables, in order. Methods whose formulas come from
/// other work (the Beta-mixture prior and the Bona fide estimator) stay as
/// blank rows.
const TABLE1_ROWS: [&str; 5] = ["PPP", "CGM", "IW", "Thres", "Sample cov"];
const TABLE2_ROWS: [&str; 5] = ["PPP", "CGM", "IW", "Thres", "Bona fide"];
const TABLE3_ROWS: [&str; 3] = ["PPP", "CGM", "IW"];

fn method_for_label(label: &str) -> Option<Method> {
    match label {
        "PPP" => Some(Method::Ppp),
        "IW" => Some(Method::Iw),
        "Thres" => Some(Method::Thres),
        "Sample cov" => Some(Method::SampleCov),
        _ => None,
    }
}

fn write_summary_table(
    path: &Path,
    results: &ExperimentResults,
    rows: &[&str],
    metric: impl Fn(&CellResult) -> Option<f64>,
) -> Result<()> {
    let mut out = create(path)?;
    let header = std::iter::once("method".to_string())
        .chain(results.plan.n_list.iter().map(|n| format!("n={n}")))
        .collect::<Vec<_>>()
        .join(",");
    write_line(&mut out, path, &header)?;
    for label in rows {
        let mut fields = vec![label.to_string()];
        for &n in &results.plan.n_list {
            let cell = method_for_label(label)
                .filter(|m| results.plan.methods.contains(m))
                .and_then(|m| results.mean_metric(m, n, &metric));
            fields.push(opt(cell));
        }
        write_line(&mut out, path, &fields.join(","))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn write_results_csv(path: &Path, results: &ExperimentResults) -> Result<()> {
    let mut out = create(path)?;
    write_line(
        &mut out,
        path,
        "method,n,replication,cov_error,gmvp_error,coverage,gamma_cov,gamma_gmvp,note",
    )?;
    for c in &results.cells {
        write_line(
            &mut out,
            path,
            &format!(
                "{},{},{},{},{},{},{},{},{}",
                c.method,
                c.n,
                c.replication,
                opt(c.cov_error),
                opt(c.gmvp_error),
                opt(c.coverage),
                opt(c.gamma_cov),
                opt(c.gamma_gmvp),
                c.note.clone().unwrap_or_default()
            ),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn write_figure_csv(
    path: &Path,
    summary: &IntervalSummary,
    truth: &PortfolioWeights,
) -> Result<()> {
    let mut out = create(path)?;
    write_line(&mut out, path, "asset,mean,lower,upper,truth")?;
    for i in 0..summary.dim() {
        write_line(
            &mut out,
            path,
            &format!(
                "{},{},{},{},{}",
                i + 1,
                fmt_f64(summary.means()[i]),
                fmt_f64(summary.lowers()[i]),
                fmt_f64(summary.uppers()[i]),
                fmt_f64(truth.get(i))
            ),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write the three summary tables, the per-replication raw results and the
/// per-method credible-interval plot data into `out_dir`. Returns the paths
/// written.
pub fn emit_tables(results: &ExperimentResults, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    let mut written = Vec::new();

    let t1 = dir.join("table1_cov_error.csv");
    write_summary_table(&t1, results, &TABLE1_ROWS, |c| c.cov_error)?;
    written.push(t1);

    let t2 = dir.join("table2_gmvp_error.csv");
    write_summary_table(&t2, results, &TABLE2_ROWS, |c| c.gmvp_error)?;
    written.push(t2);

    let t3 = dir.join("table3_coverage.csv");
    write_summary_table(&t3, results, &TABLE3_ROWS, |c| c.coverage)?;
    written.push(t3);

    let raw = dir.join("results.csv");
    write_results_csv(&raw, results)?;
    written.push(raw);

    for fig in &results.figures {
        let path = dir.join(format!("gmvp_intervals_{}_n{}.csv", fig.method, fig.n));
        write_figure_csv(&path, &fig.summary, &results.truth_weights)?;
        written.push(path);
    }
    Ok(written)
}

/// Re-emit the three summary tables from raw per-cell results alone; the
/// row/column layout is derived from the cells. Used to rebuild tables from
/// a previous run directory.
pub fn emit_tables_from_cells(
    cells: &[CellResult],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    let mut n_list: Vec<usize> = cells.iter().map(|c| c.n).collect();
    n_list.sort_unstable();
    n_list.dedup();
    let methods: Vec<Method> = Method::ALL
        .iter()
        .copied()
        .filter(|m| cells.iter().any(|c| c.method == *m))
        .collect();

    type Metric<'a> = &'a dyn Fn(&CellResult) -> Option<f64>;
    let mean = |method: Method, n: usize, metric: Metric| {
        let values: Vec<f64> = cells
            .iter()
            .filter(|c| c.method == method && c.n == n)
            .filter_map(metric)
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };

    let mut written = Vec::new();
    let specs: [(&str, &[&str], Metric); 3] = [
        ("table1_cov_error.csv", &TABLE1_ROWS, &|c| c.cov_error),
        ("table2_gmvp_error.csv", &TABLE2_ROWS, &|c| c.gmvp_error),
        ("table3_coverage.csv", &TABLE3_ROWS, &|c| c.coverage),
    ];
    for (name, rows, metric) in specs {
        let path = dir.join(name);
        let mut out = create(&path)?;
        let header = std::iter::once("method".to_string())
            .chain(n_list.iter().map(|n| format!("n={n}")))
            .collect::<Vec<_>>()
            .join(",");
        write_line(&mut out, &path, &header)?;
        for label in rows {
            let mut fields = vec![label.to_string()];
            for &n in &n_list {
                let cell = method_for_label(label)
                    .filter(|m| methods.contains(m))
                    .and_then(|m| mean(m, n, metric));
                fields.push(opt(cell));
            }
            write_line(&mut out, &path, &fields.join(","))?;
        }
        out.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Write a covariance matrix as a labeled full-matrix CSV.
pub fn write_matrix_csv(
    m: &crate::matrix::CovMatrix,
    asset_ids: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let p = m.dim();
    let labels: Vec<String> = match asset_ids {
        Some(ids) => ids.to_vec(),
        None => (1..=p).map(|i| format!("A{i}")).collect(),
    };
    if labels.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            actual: labels.len(),
        });
    }
    let mut out = create(path)?;
    write_line(&mut out, path, &format!("asset,{}", labels.join(",")))?;
    for i in 0..p {
        let row: Vec<String> = (0..p).map(|j| fmt_f64(m.get(i, j))).collect();
        write_line(&mut out, path, &format!("{},{}", labels[i], row.join(",")))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Read a covariance matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<(crate::matrix::CovMatrix, Vec<String>)> {
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
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let p = labels.len();
    if p == 0 {
        return Err(Error::BadFile {
            path: path_str,
            message: "matrix csv needs at least one asset column".into(),
        });
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(p);
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path_str.clone(),
            source,
        })?;
        if record.len() != p + 1 {
            return Err(Error::BadFile {
                path: path_str,
                message: format!(
                    "row {} has {} fields, expected {}",
                    row_idx + 2,
                    record.len(),
                    p + 1
                ),
            });
        }
        let mut row = Vec::with_capacity(p);
        for (col, cell) in record.iter().skip(1).enumerate() {
            row.push(cell.parse().map_err(|_| Error::ParseCell {
                path: path_str.clone(),
                row: row_idx + 2,
                col: col + 2,
                message: format!("cannot parse '{cell}' as a number"),
            })?);
        }
        rows.push(row);
    }
    if rows.len() != p {
        return Err(Error::BadFile {
            path: path_str,
            message: format!("expected {p} data rows, found {}", rows.len()),
        });
    }
    Ok((crate::matrix::CovMatrix::from_rows(&rows)?, labels))
}

/// Re-derive per-cell results from a previously written `results.csv`.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<CellResult>> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path_str.clone(),
            source,
        })?;
    let mut cells = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path_str.clone(),
            source,
        })?;
        let cell_err = |col: usize, msg: &str| Error::ParseCell {
            path: path_str.clone(),
            row: row_idx + 2,
            col: col + 1,
            message: msg.to_string(),
        };
        let method: Method = record
            .get(0)
            .unwrap_or_default()
            .parse()
            .map_err(|_| cell_err(0, "bad method"))?;
        let n: usize = record
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| cell_err(1, "bad n"))?;
        let replication: usize = record
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| cell_err(2, "bad replication"))?;
        let parse_opt = |col: usize| -> Result<Option<f64>> {
            match record.get(col).map(str::trim) {
                None | Some("") => Ok(None),
                Some(s) => s.parse().map(Some).map_err(|_| cell_err(col, "bad number")),
            }
        };
        cells.push(CellResult {
            method,
            n,
            replication,
            cov_error: parse_opt(3)?,
            gmvp_error: parse_opt(4)?,
            coverage: parse_opt(5)?,
            gamma_cov: parse_opt(6)?,
            gamma_gmvp: parse_opt(7)?,
            note: record.get(8).filter(|s| !s.is_empty()).map(str::to_string),
        });
    }
    Ok(cells)
}

/// Write a cross-validation score table as CSV.
pub fn write_cv_csv(result: &CvResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_line(&mut out, path, "gamma,epsilon,mean_loss,se_loss")?;
    for row in &result.score_table {
        write_line(
            &mut out,
            path,
            &format!(
                "{},{},{},{}",
                fmt_f64(row.gamma),
                fmt_f64(row.epsilon),
                fmt_f64(row.mean_loss),
                fmt_f64(row.se_loss)
            ),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write portfolio weights as `(asset, weight)` CSV.
pub fn write_weights_csv(
    weights: &PortfolioWeights,
    asset_ids: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_line(&mut out, path, "asset,weight")?;
    for i in 0..weights.dim() {
        let label = asset_ids
            .map(|ids| ids[i].clone())
            .unwrap_or_else(|| (i + 1).to_string());
        write_line(
            &mut out,
            path,
            &format!("{label},{}", fmt_f64(weights.get(i))),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write an interval summary as `(asset, mean, lower, upper)` CSV.
pub fn write_intervals_csv(
    summary: &IntervalSummary,
    asset_ids: Option<&[String]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_line(&mut out, path, "asset,mean,lower,upper")?;
    for i in 0..summary.dim() {
        let label = asset_ids
            .map(|ids| ids[i].clone())
            .unwrap_or_else(|| (i + 1).to_string());
        write_line(
            &mut out,
            path,
            &format!(
                "{label},{},{},{}",
                fmt_f64(summary.means()[i]),
                fmt_f64(summary.lowers()[i]),
                fmt_f64(summary.uppers()[i])
            ),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write a backtest report in the published table's layout.
pub fn write_backtest_csv(
    report: &crate::ingest::BacktestReport,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_line(&mut out, path, "method,mean_realized_sd,n_windows_used")?;
    for mb in &report.methods {
        write_line(
            &mut out,
            path,
            &format!(
                "{},{},{}",
                mb.method,
                opt(mb.mean_realized_sd),
                mb.windows_used
            ),
        )?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Write per-window backtest outcomes.
pub fn write_backtest_windows_csv(
    report: &crate::ingest::BacktestReport,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    write_line(
        &mut out,
        path,
        "method,iteration,split_index,realized_sd,error",
    )?;
    for mb in &report.methods {
        for w in &mb.windows {
            write_line(
                &mut out,
                path,
                &format!(
                    "{},{},{},{},{}",
                    mb.method,
                    w.iteration,
                    w.split_index,
                    opt(w.realized_sd),
                    w.error.clone().unwrap_or_default()
                ),
            )?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::CovMatrix;
    use crate::simbench::{ExperimentPlan, TruthSpec};

    fn tiny_results(methods: Vec<Method>) -> ExperimentResults {
        let plan = ExperimentPlan {
            truth: TruthSpec::Custom(CovMatrix::identity(3)),
            p: 3,
            n_list: vec![10, 20],
            replications: 1,
            n_draws: 2,
            methods,
            level: 0.95,
            seed: 0,
        };
        ExperimentResults {
            plan,
            truth_weights: PortfolioWeights::new(vec![1.0 / 3.0; 3]).unwrap(),
            cells: vec![CellResult {
                method: Method::SampleCov,
                n: 10,
                replication: 0,
                cov_error: Some(0.25),
                gmvp_error: Some(0.5),
                coverage: None,
                gamma_cov: None,
                gamma_gmvp: None,
                note: None,
            }],
            figures: vec![],
        }
    }

    #[test]
    fn empty_method_set_writes_header_only_tables() {
        let dir = tempfile::tempdir().unwrap();
        let results = tiny_results(vec![]);
        emit_tables(&results, dir.path()).unwrap();
        let t1 = std::fs::read_to_string(dir.path().join("table1_cov_error.csv")).unwrap();
        let mut lines = t1.lines();
        assert_eq!(lines.next(), Some("method,n=10,n=20"));
        // Rows exist but all value cells are blank.
        for line in lines {
            let mut parts = line.split(',');
            let _label = parts.next().unwrap();
            assert!(parts.all(|cell| cell.is_empty()), "line: {line}");
        }
    }

    #[test]
    fn table_layout_matches_method_by_n() {
        let dir = tempfile::tempdir().unwrap();
        let results = tiny_results(vec![Method::SampleCov]);
        emit_tables(&results, dir.path()).unwrap();
        let t1 = std::fs::read_to_string(dir.path().join("table1_cov_error.csv")).unwrap();
        let lines: Vec<&str> = t1.lines().collect();
        assert_eq!(lines[0], "method,n=10,n=20");
        assert!(lines[1].starts_with("PPP,"));
        assert!(lines[2].starts_with("CGM,"));
        assert!(lines[3].starts_with("IW,"));
        assert!(lines[4].starts_with("Thres,"));
        assert!(lines[5].starts_with("Sample cov,"));
        let sample_row: Vec<&str> = lines[5].split(',').collect();
        assert_eq!(sample_row[1], fmt_f64(0.25));
        assert_eq!(sample_row[2], ""); // no n = 20 cell in the fixture
    }

    #[test]
    fn results_csv_round_trips_as_decimal_strings() {
        let dir = tempfile::tempdir().unwrap();
        let results = tiny_results(vec![Method::SampleCov]);
        emit_tables(&results, dir.path()).unwrap();
        let path = dir.path().join("results.csv");
        let cells = read_results_csv(&path).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].cov_error, Some(0.25));
        assert_eq!(cells[0].gmvp_error, Some(0.5));
        assert_eq!(cells[0].coverage, None);

        // Re-emitting from the parsed cells reproduces the bytes.
        let reparsed = ExperimentResults {
            cells,
            ..tiny_results(vec![Method::SampleCov])
        };
        let dir2 = tempfile::tempdir().unwrap();
        emit_tables(&reparsed, dir2.path()).unwrap();
        let a = std::fs::read(dir.path().join("results.csv")).unwrap();
        let b = std::fs::read(dir2.path().join("results.csv")).unwrap();
        assert_eq!(a, b);
    }
}
