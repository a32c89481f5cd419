//! Command-line experiment runner. Every subcommand writes one CSV table,
//! preceded by `# config:` and optional `# ledger:` / `# summary:` lines.

mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};

use crate::error::Error;

pub use commands::{execute, Report};
pub use config::{env_var_name, ExperimentConfig, Subcommand};

/// Failure of a CLI run, mapped to the process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad or unknown configuration: exit 2.
    Usage(String),
    /// Library error: exit 2 for invalid input, 3 for numerical failure.
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Run(Error::Csv(e))
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Run(Error::Numerical(_) | Error::Solver(_)) => 3,
            Failure::Run(Error::Io(_) | Error::Csv(_)) => 1,
            Failure::Run(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Run(e) => write!(f, "{e}"),
        }
    }
}

const ENV_HELP: &str = "\
Parameters resolve as: flag > environment > config file > default.
Environment variables are ROUNDNET_ followed by the key in upper case with
`-` as `_`; the keys N and R map to BIG_N and BIG_R, e.g. ROUNDNET_RHO,
ROUNDNET_BIG_N, ROUNDNET_DESK_BIG_R. Config files hold one key=value per
line with `#` comments. Exit status: 0 success, 2 invalid configuration,
3 numerical failure.";

#[derive(Parser, Debug)]
#[command(name = "roundnet", version, about = "Random-rounding sphere net experiments", after_help = ENV_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand, Debug)]
enum Command {
    /// Enumerate the lattice-shell net and its cardinality bound.
    NetStats(Flags),
    /// Rounding tails against the Hoeffding bound.
    RoundingTails(Flags),
    /// Sphere expectation of phi against its closed-form bound.
    Lemma32(Flags),
    /// Supremum of the Gaussian sum: net, search and key bound.
    KeyBound(Flags),
    /// Random body, mass, volume and realized slicing constant.
    Slicing(Flags),
    /// Worst strip counts for uniform and clustered configurations.
    Strips(Flags),
    /// Hilbert-Schmidt comparison of |A eta| and |A xi|.
    HsNet(Flags),
    /// B_kappa solver (with --norms) or deviation experiment.
    Bkappa(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long = "N")]
    big_n: Option<String>,
    #[arg(long = "t-max")]
    t_max: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Output file; `-` for standard output.
    #[arg(long)]
    out: Option<String>,
    /// Constants ledger file (key=value).
    #[arg(long)]
    ledger: Option<String>,
    #[arg(long = "desk-m")]
    desk_m: Option<String>,
    /// Comma-separated N_k.
    #[arg(long = "desk-N")]
    desk_n: Option<String>,
    /// Comma-separated R_k.
    #[arg(long = "desk-R")]
    desk_r: Option<String>,
    #[arg(long)]
    dilation: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated squared column norms.
    #[arg(long)]
    norms: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    directions: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    /// gaussian, rademacher, heavy or student.
    #[arg(long)]
    sampler: Option<String>,
    /// Config file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Flags {
    fn into_map(self) -> (BTreeMap<String, String>, Option<PathBuf>) {
        let pairs = [
            ("n", self.n),
            ("rho", self.rho),
            ("r", self.r),
            ("N", self.big_n),
            ("t-max", self.t_max),
            ("trials", self.trials),
            ("seed", self.seed),
            ("workers", self.workers),
            ("out", self.out),
            ("ledger", self.ledger),
            ("desk-m", self.desk_m),
            ("desk-N", self.desk_n),
            ("desk-R", self.desk_r),
            ("dilation", self.dilation),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("norms", self.norms),
            ("restarts", self.restarts),
            ("directions", self.directions),
            ("budget", self.budget),
            ("sampler", self.sampler),
        ];
        let map = pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect();
        (map, self.config)
    }
}

/// Resolves the configuration and runs it on a pool of `workers` threads.
/// Returns the complete output text.
pub fn run_config(cfg: &ExperimentConfig) -> Result<String, Failure> {
    let workers: usize = cfg.get("workers")?;
    if workers == 0 {
        return Err(Failure::Usage("`workers` must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {workers} workers: {e}")))?;
    let report = pool.install(|| execute(cfg))?;
    let mut text = format!("# config: {}\n", cfg.canonical());
    for line in &report.header {
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&String::from_utf8_lossy(&report.body));
    Ok(text)
}

fn run_inner(cli: Cli) -> Result<(), Failure> {
    let (sub, flags) = match cli.command {
        Command::NetStats(f) => (Subcommand::NetStats, f),
        Command::RoundingTails(f) => (Subcommand::RoundingTails, f),
        Command::Lemma32(f) => (Subcommand::Lemma32, f),
        Command::KeyBound(f) => (Subcommand::KeyBound, f),
        Command::Slicing(f) => (Subcommand::Slicing, f),
        Command::Strips(f) => (Subcommand::Strips, f),
        Command::HsNet(f) => (Subcommand::HsNet, f),
        Command::Bkappa(f) => (Subcommand::Bkappa, f),
    };
    let (flags, config_path) = flags.into_map();
    let file = match config_path {
        Some(p) => config::read_config_file(&p)?,
        None => BTreeMap::new(),
    };
    let cfg = ExperimentConfig::resolve(sub, &flags, |k| std::env::var(k).ok(), &file)?;
    let text = run_config(&cfg)?;
    match cfg.raw("out") {
        Some("-") | None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Run(e.into()))?,
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Run(e.into()))?,
    }
    Ok(())
}

/// Entry point of the `roundnet` binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
