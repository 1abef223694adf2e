use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use covppp::report::emit_tables;
use covppp::simbench::{run_experiment, ExperimentPlan, TruthSpec};
use covppp::Method;

use crate::outdir::{self, BaseMeta};
use crate::{parse_methods, parse_usize_list, CommonArgs, CvArgs};

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// True covariance: sigma1 or sigma2.
    #[arg(long, default_value = "sigma1")]
    truth: String,

    /// Dimension (sigma1 needs a multiple of 10, sigma2 of 100).
    #[arg(long)]
    p: Option<usize>,

    /// Comma-separated sample sizes.
    #[arg(long, value_name = "LIST", value_parser = parse_usize_list)]
    n: Option<std::vec::Vec<usize>>,

    /// Replications per sample size.
    #[arg(long)]
    reps: Option<usize>,

    /// Posterior draws per final ensemble.
    #[arg(long = "n-draws")]
    n_draws: Option<usize>,

    /// Comma-separated method list.
    #[arg(long, value_name = "LIST", value_parser = parse_methods,
          default_value = "ppp,iw,thres,samplecov")]
    methods: std::vec::Vec<Method>,

    /// Credible level for coverage.
    #[arg(long, default_value_t = 0.95)]
    level: f64,

    /// Full published-benchmark scale: p=100, n=50,500,2000, 50
    /// replications, 2000 draws. Hours of compute; the defaults without
    /// this flag are a desk-scale restriction.
    #[arg(long)]
    paper_scale: bool,

    #[command(flatten)]
    cv: CvArgs,
}

#[derive(Serialize)]
struct SimulateMeta {
    #[serde(flatten)]
    base: BaseMeta,
    truth: String,
    p: usize,
    n_list: Vec<usize>,
    replications: usize,
    n_draws: usize,
    methods: Vec<String>,
    level: f64,
    cv_splits: usize,
    cv_train_fraction: f64,
    cv_grid_points: usize,
    cv_n_draws: usize,
    epsilons: Option<Vec<f64>>,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let truth = match args.truth.to_ascii_lowercase().as_str() {
        "sigma1" => TruthSpec::Sigma1,
        "sigma2" => TruthSpec::Sigma2,
        other => bail!("unknown truth '{other}' (expected sigma1 or sigma2)"),
    };
    let (p, n_list, reps, n_draws) = if args.paper_scale {
        (
            args.p.unwrap_or(100),
            args.n.clone().unwrap_or_else(|| vec![50, 500, 2000]),
            args.reps.unwrap_or(50),
            args.n_draws.unwrap_or(2000),
        )
    } else {
        (
            args.p.unwrap_or(20),
            args.n.clone().unwrap_or_else(|| vec![50, 500]),
            args.reps.unwrap_or(10),
            args.n_draws.unwrap_or(500),
        )
    };

    let plan = ExperimentPlan {
        truth,
        p,
        n_list: n_list.clone(),
        replications: reps,
        n_draws,
        methods: args.methods.clone(),
        level: args.level,
        seed: args.common.seed,
    };
    plan.validate()?;
    let cv = args.cv.settings();
    outdir::check(&args.common.out, args.common.force)?;

    let results = crate::with_workers(args.common.workers, || Ok(run_experiment(&plan, &cv)?))?;

    for cell in &results.cells {
        if let Some(note) = &cell.note {
            eprintln!(
                "warning: {} n={} replication {}: {note}",
                cell.method, cell.n, cell.replication
            );
        }
    }

    outdir::create(&args.common.out)?;
    emit_tables(&results, &args.common.out)?;
    outdir::write_metadata(
        &args.common.out,
        &SimulateMeta {
            base: BaseMeta::new("simulate", args.common.seed, args.common.workers),
            truth: args.truth.to_ascii_lowercase(),
            p,
            n_list,
            replications: reps,
            n_draws,
            methods: args.methods.iter().map(|m| m.to_string()).collect(),
            level: args.level,
            cv_splits: cv.n_splits,
            cv_train_fraction: cv.train_fraction,
            cv_grid_points: cv.gamma_grid_points,
            cv_n_draws: cv.n_draws,
            epsilons: cv.grid_epsilon.clone(),
        },
    )?;
    println!("wrote tables to {}", args.common.out.display());
    Ok(())
}
