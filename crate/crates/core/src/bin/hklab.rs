use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hklab::experiment::{parse_threads, run, ExperimentConfig, Kind, RunError};
use hklab::study::OperatorChoice;
use hklab::verify::Family;

#[derive(Parser)]
#[command(name = "hklab", version, about = "Heat kernel estimates on weighted Sierpinski gaskets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the renormalization equation for (sigma, lambda).
    Renorm(Common),
    /// Print the gasket exponents and their residuals.
    Exponents(Common),
    /// Build the gasket network and its resistance metric.
    Gasket(Common),
    /// Chain-metric profile of a distance CSV, or of the gasket corners.
    Chain {
        #[command(flatten)]
        common: Common,
        /// Distance matrix CSV with a header row of labels.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tabulate the subordination scale.
    Phi(Common),
    /// Heat kernel of the local or jump operator with Markov checks.
    Heat {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        operator: Option<Operator>,
    },
    /// Fit a bound family against the heat kernel across levels.
    Verify(Common),
    /// Crossover times between the near-diagonal and jump regimes.
    Crossover(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Local,
    Jump,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    /// Gasket level; repeat for multi-level runs.
    #[arg(long)]
    level: Vec<usize>,
    #[arg(long)]
    family: Option<Family>,
    /// Output directory for artifacts and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides HKLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn configure(common: &Common, kind: Kind) -> Result<ExperimentConfig, RunError> {
    let mut c = match &common.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    let keep_heat_kind = kind == Kind::LocalHk && matches!(c.kind, Some(Kind::LocalHk | Kind::JumpHk));
    if !keep_heat_kind {
        c.kind = Some(kind);
    }
    if let Some(t) = common.tau {
        c.tau = t;
    }
    if let Some(&l) = common.level.first() {
        c.level = l;
        c.levels = common.level.clone();
    }
    if let Some(f) = common.family {
        c.family = f;
    }
    if let Some(o) = &common.out {
        c.out = Some(o.clone());
    }
    Ok(c)
}

fn threads(common: &Common) -> Result<Option<usize>, RunError> {
    match (common.threads, std::env::var("HKLAB_THREADS")) {
        (Some(0), _) => Err(RunError::Config("--threads must be positive".into())),
        (Some(n), _) => Ok(Some(n)),
        (None, Ok(v)) => parse_threads(&v).map(Some),
        (None, Err(_)) => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<bool, RunError> {
    let (common, config) = match &cli.command {
        Command::Renorm(c) => (c, configure(c, Kind::Renorm)?),
        Command::Exponents(c) => (c, configure(c, Kind::Exponents)?),
        Command::Gasket(c) => (c, configure(c, Kind::Gasket)?),
        Command::Chain { common, csv } => {
            let mut config = configure(common, Kind::Chain)?;
            if csv.is_some() {
                config.chain.csv = csv.clone();
            }
            (common, config)
        }
        Command::Phi(c) => (c, configure(c, Kind::Phi)?),
        Command::Heat { common, operator } => {
            let mut config = configure(common, Kind::LocalHk)?;
            if let Some(op) = operator {
                let (kind, op) = match op {
                    Operator::Local => (Kind::LocalHk, OperatorChoice::Local),
                    Operator::Jump => (Kind::JumpHk, OperatorChoice::Jump),
                };
                config.kind = Some(kind);
                config.operator = Some(op);
            }
            (common, config)
        }
        Command::Verify(c) => (c, configure(c, Kind::Verify)?),
        Command::Crossover(c) => {
            let mut config = configure(c, Kind::Crossover)?;
            if c.family.is_none() && config.family.is_local() {
                config.family = Family::SplusHk;
            }
            (c, config)
        }
    };
    if let Some(n) = threads(common)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Config(e.to_string()))?;
    }
    let start = Instant::now();
    let outcome = run(&config)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("config hash {}", outcome.config_hash);
    if let Some(dir) = &config.out {
        println!("wrote {} artifacts to {}", outcome.artifacts.len(), dir.display());
    }
    println!("pass={} ({:.2} s)", outcome.pass, start.elapsed().as_secs_f64());
    Ok(outcome.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("hklab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
