//! On-disk format for posterior ensembles: a flat CSV of the authoritative
//! lower triangle, `draw_index,i,j,value` rows with 0-based indices, plus a JSON
//! metadata file carrying the seed, prior and threshold configuration.
//!
//! Values are written with 17 significant digits, which round-trips every
//! f64 exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::CovMatrix;
use crate::ppp::{PosteriorEnsemble, ThresholdConfig};
use crate::rng::{RngStream, GENERATOR_NAME};
use crate::sampling::InverseWishartParams;

/// Format a float with 17 significant digits (exact f64 round trip).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleMeta {
    format_version: u32,
    generator: String,
    package_version: String,
    master_seed: u64,
    stream_id: u64,
    n_draws: usize,
    p: usize,
    n: usize,
    gamma: f64,
    epsilon: f64,
    preserve_diagonal: bool,
    post_processed: bool,
    prior_nu: f64,
    /// Packed lower triangle of the prior scale, row-major.
    prior_scale_lower: Vec<f64>,
}

/// Write an ensemble as `<csv_path>` plus `<meta_path>`.
pub fn write_ensemble(
    ensemble: &PosteriorEnsemble,
    csv_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, line: &str| -> Result<()> {
        out.write_all(line.as_bytes())
            .and_then(|()| out.write_all(b"\n"))
            .map_err(|e| Error::io(csv_path, e))
    };
    write(&mut out, "draw_index,i,j,value")?;
    for (k, draw) in ensemble.draws().iter().enumerate() {
        for (i, j, v) in draw.iter_lower() {
            write(&mut out, &format!("{k},{i},{j},{}", fmt_f64(v)))?;
        }
    }
    out.flush().map_err(|e| Error::io(csv_path, e))?;

    let cfg = ensemble.config();
    let meta = EnsembleMeta {
        format_version: 1,
        generator: GENERATOR_NAME.to_string(),
        package_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: ensemble.seed(),
        stream_id: ensemble.stream_id(),
        n_draws: ensemble.len(),
        p: cfg.p(),
        n: cfg.n(),
        gamma: cfg.gamma(),
        epsilon: cfg.epsilon(),
        preserve_diagonal: cfg.preserves_diagonal(),
        post_processed: ensemble.is_post_processed(),
        prior_nu: ensemble.prior().nu(),
        prior_scale_lower: ensemble.prior().scale().lower_triangle().to_vec(),
    };
    let meta_path = meta_path.as_ref();
    let file = File::create(meta_path).map_err(|e| Error::io(meta_path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &meta).map_err(|e| Error::BadFile {
        path: meta_path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(())
}

/// Read an ensemble written by [`write_ensemble`].
pub fn read_ensemble(
    csv_path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<PosteriorEnsemble> {
    let meta_path = meta_path.as_ref();
    let file = File::open(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let meta: EnsembleMeta =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::BadFile {
            path: meta_path.display().to_string(),
            message: e.to_string(),
        })?;
    if meta.format_version != 1 {
        return Err(Error::BadFile {
            path: meta_path.display().to_string(),
            message: format!("unsupported format version {}", meta.format_version),
        });
    }
    let p = meta.p;
    let tri_len = p * (p + 1) / 2;
    let prior = InverseWishartParams::new(
        CovMatrix::from_lower(p, meta.prior_scale_lower.clone())?,
        meta.prior_nu,
    )?;
    let cfg = ThresholdConfig::new(meta.gamma, meta.epsilon, meta.n, p)?
        .preserve_diagonal(meta.preserve_diagonal);

    let csv_path = csv_path.as_ref();
    let path_str = csv_path.display().to_string();
    let file = File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    match lines.next() {
        Some(Ok(header)) if header.trim() == "draw_index,i,j,value" => {}
        _ => {
            return Err(Error::BadFile {
                path: path_str,
                message: "expected header 'draw_index,i,j,value'".into(),
            })
        }
    }

    let mut draws: Vec<Vec<f64>> = vec![Vec::with_capacity(tri_len); meta.n_draws];
    for (line_no, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(csv_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse_err = |msg: &str| Error::ParseCell {
            path: path_str.clone(),
            row: line_no + 2,
            col: 1,
            message: msg.to_string(),
        };
        let k: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad draw index"))?;
        let i: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad row index"))?;
        let j: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad column index"))?;
        let v: f64 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad value"))?;
        if k >= meta.n_draws || i >= p || j > i {
            return Err(parse_err("index out of range for declared shape"));
        }
        // Rows arrive draw-major in lower-triangle order.
        if draws[k].len() != i * (i + 1) / 2 + j {
            return Err(parse_err("rows out of order"));
        }
        draws[k].push(v);
    }
    let draws: Vec<CovMatrix> = draws
        .into_iter()
        .enumerate()
        .map(|(k, packed)| {
            if packed.len() != tri_len {
                return Err(Error::Draw {
                    index: k,
                    source: Box::new(Error::DimensionMismatch {
                        expected: tri_len,
                        actual: packed.len(),
                    }),
                });
            }
            CovMatrix::from_lower(p, packed)
        })
        .collect::<Result<_>>()?;

    PosteriorEnsemble::new(
        draws,
        cfg,
        prior,
        RngStream::with_stream(meta.master_seed, meta.stream_id),
        meta.post_processed,
    )
}
