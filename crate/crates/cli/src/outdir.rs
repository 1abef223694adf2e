//! Run-directory protocol: refuse to touch a nonempty directory without
//! `--force`, and write a metadata file echoing the resolved configuration.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Check the output directory before any heavy work. Returns an error if it
/// exists and is nonempty, unless `force` is set.
pub fn check(out: &Path, force: bool) -> Result<()> {
    if out.exists() {
        let nonempty = fs::read_dir(out)
            .with_context(|| format!("cannot inspect {}", out.display()))?
            .next()
            .is_some();
        if nonempty && !force {
            bail!(
                "output directory {} already exists and is not empty; pass --force to replace its files",
                out.display()
            );
        }
    }
    Ok(())
}

/// Create the directory once outputs are ready to be written.
pub fn create(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

/// Serialize the resolved configuration (no timestamps: reruns must be
/// byte-identical).
pub fn write_metadata<T: Serialize>(out: &Path, meta: &T) -> Result<()> {
    let path = out.join("metadata.json");
    let json = serde_json::to_string_pretty(meta).context("serializing metadata")?;
    fs::write(&path, json.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Common metadata fields shared by every subcommand.
#[derive(Serialize)]
pub struct BaseMeta {
    pub command: &'static str,
    pub package_version: &'static str,
    pub generator: &'static str,
    pub seed: u64,
    pub workers: usize,
}

impl BaseMeta {
    pub fn new(command: &'static str, seed: u64, workers: usize) -> Self {
        BaseMeta {
            command,
            package_version: env!("CARGO_PKG_VERSION"),
            generator: covppp::GENERATOR_NAME,
            seed,
            workers,
        }
    }
}
