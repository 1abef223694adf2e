use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use covppp::report::{emit_tables_from_cells, read_results_csv};

use crate::outdir::{self, BaseMeta};
use crate::CommonArgs;

#[derive(Args)]
pub struct TablesArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// A previous `simulate` run directory (containing results.csv).
    #[arg(long, value_name = "DIR")]
    results: PathBuf,
}

#[derive(Serialize)]
struct TablesMeta {
    #[serde(flatten)]
    base: BaseMeta,
    results: String,
    cells: usize,
}

pub fn run(args: TablesArgs) -> Result<()> {
    outdir::check(&args.common.out, args.common.force)?;
    let results_csv = args.results.join("results.csv");
    if !results_csv.exists() {
        bail!("{} does not contain results.csv", args.results.display());
    }
    let cells = read_results_csv(&results_csv)?;
    if cells.is_empty() {
        bail!("{} holds no result rows", results_csv.display());
    }

    outdir::create(&args.common.out)?;
    emit_tables_from_cells(&cells, &args.common.out)?;
    outdir::write_metadata(
        &args.common.out,
        &TablesMeta {
            base: BaseMeta::new("tables", args.common.seed, args.common.workers),
            results: args.results.display().to_string(),
            cells: cells.len(),
        },
    )?;
    println!("re-emitted tables to {}", args.common.out.display());
    Ok(())
}
