use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbu_core::harness::{load_config, run_experiment, ExperimentConfig, Kind};
use gbu_core::Error;

#[derive(Parser)]
#[command(
    name = "gbu",
    version,
    about = "Gradient blowup and loss of boundary conditions experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output root; bundles go to `<out>/<kind>-<hash>`.
    #[arg(long, env = "GBU_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for concurrent sub-runs.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct ThresholdArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p: Option<f64>,
    /// Initial profile shape: zero, quartic, eigen, bump or collar.
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Single classical or truncated run.
    Run(Common),
    /// Bracket the blowup threshold of a profile.
    Threshold(ThresholdArgs),
    /// Boundary loss map of the viscosity solution.
    Lossmap(Common),
    /// Boundary profile fit at the first cap crossing.
    Profile(Common),
    /// Elliptic barrier and its supersolution constant.
    Barrier(Common),
    /// First Dirichlet eigenpair.
    Eigen(Common),
    /// Seeded structure suite.
    Selftest(Common),
}

const SELFTEST_DEFAULT: &str =
    "kind = \"selftest\"\n[domain]\nkind = \"interval\"\n[hamiltonian]\np = 3.0\n";

fn config_for(kind: Kind, common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&common.config, kind) {
        (Some(path), _) => load_config(path)?,
        (None, Kind::Selftest) => ExperimentConfig::parse(SELFTEST_DEFAULT)?,
        (None, _) => {
            return Err(Error::Config {
                key: "--config".into(),
                message: "required for this subcommand".into(),
            })
        }
    };
    cfg.kind = kind;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let (kind, common, threshold) = match cli.command {
        Command::Run(c) => (Kind::Run, c, None),
        Command::Threshold(t) => (Kind::Threshold, t.common.clone(), Some(t)),
        Command::Lossmap(c) => (Kind::Lossmap, c, None),
        Command::Profile(c) => (Kind::Profile, c, None),
        Command::Barrier(c) => (Kind::Barrier, c, None),
        Command::Eigen(c) => (Kind::Eigen, c, None),
        Command::Selftest(c) => (Kind::Selftest, c, None),
    };
    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("--jobs: {e}")))?;
    }
    let mut cfg = config_for(kind, &common)?;
    if let Some(t) = threshold {
        if let Some(p) = t.p {
            cfg.hamiltonian.p = p;
        }
        if let Some(profile) = t.profile {
            cfg.initial.profile = profile;
        }
        if let Some(tol) = t.rel_tol {
            cfg.threshold.rel_tol = tol;
        }
        if let Some(t_max) = t.t_max {
            cfg.solver.t_max = t_max;
        }
    }
    cfg.validate()?;
    let bundle = run_experiment(&cfg, common.out.as_deref())?;
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", bundle.dir.display());
    println!(
        "{}",
        serde_json::to_string_pretty(&bundle.summary["result"]).expect("json serializes")
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
