use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mpprecond::experiment::{run, ExperimentConfig};

/// Parameter-robust preconditioners for multiphysics interface problems.
#[derive(Parser, Debug)]
#[command(name = "mpprecond", version)]
struct Cli {
    /// solve | cond | mms | dofs | time
    mode: String,
    /// key=value file; flags given on the command line win
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    /// list of mesh sizes, e.g. 2^-3,2^-4
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long = "K")]
    perm: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// penalty list; `inf` disables the penalty
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// kappa2/kappa1 for the Poisson problems
    #[arg(long = "kappa-ratio")]
    kappa_ratio: Option<String>,
    #[arg(long)]
    precond: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "max-iter")]
    max_iter: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long = "dense-eig-limit")]
    dense_eig_limit: Option<String>,
    /// project out the known kernel before solving
    #[arg(long)]
    deflate: bool,
    /// record MinRes wall time in the time_s column
    #[arg(long)]
    timings: bool,
    /// long-format CSV for plotting
    #[arg(long = "plot-data")]
    plot_data: Option<String>,
}

fn configure(cli: &Cli) -> mpprecond::error::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.set("mode", &cli.mode)?;
    let overrides = [
        ("problem", &cli.problem),
        ("h", &cli.h),
        ("mu", &cli.mu),
        ("K", &cli.perm),
        ("alpha", &cli.alpha),
        ("eta", &cli.eta),
        ("k", &cli.k),
        ("kappa-ratio", &cli.kappa_ratio),
        ("precond", &cli.precond),
        ("seed", &cli.seed),
        ("tol", &cli.tol),
        ("max-iter", &cli.max_iter),
        ("out", &cli.out),
        ("jobs", &cli.jobs),
        ("dense-eig-limit", &cli.dense_eig_limit),
        ("plot-data", &cli.plot_data),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if cli.deflate {
        cfg.deflate = true;
    }
    if cli.timings {
        cfg.timings = true;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure(&cli).and_then(|cfg| run(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("mpprecond: {e}");
            ExitCode::from(1)
        }
    }
}
