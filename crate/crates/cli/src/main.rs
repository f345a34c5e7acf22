//! `wg7`: keystream, MILP models, involved-key extraction, the cube attack
//! pipeline and self-tests.

mod commands;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wg7_core::milp::AndModel;
use wg7_core::trail::DEFAULT_BUDGET;
use wg7_core::MatrixSel;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "wg7",
    version,
    about = "WG-7 division property cube attack workbench"
)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "WG7_WORKERS", default_value_t = 0)]
    pub workers: usize,

    #[arg(long, global = true, env = "WG7_SEED", default_value_t = 1)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print keystream bits and the final state digest.
    Keystream(KeystreamArgs),
    /// Write the R-round evaluation model as an LP file.
    Model(ModelArgs),
    /// Find the key bits involved in a cube's superpoly.
    ExtractJ(ExtractArgs),
    /// Offline tables, IV screening and the online phase.
    Attack(AttackArgs),
    /// Run the built-in consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
pub struct KeystreamArgs {
    /// 20 hex digits, K0 is the top bit of the first digit.
    #[arg(long, env = "WG7_KEY", default_value = "00000000000000000000")]
    pub key: String,
    /// 81 binary digits, IV0 first.
    #[arg(long, env = "WG7_IV", default_value_t = "0".repeat(81))]
    pub iv: String,
    #[arg(long, env = "WG7_ROUNDS", default_value_t = 46)]
    pub rounds: usize,
    #[arg(short, long, default_value_t = 32)]
    pub n: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ModelOpts {
    #[arg(long, env = "WG7_ROUNDS")]
    pub rounds: usize,
    /// IV indices, comma separated.
    #[arg(long, env = "WG7_CUBE", value_parser = parse_cube, default_value = "")]
    pub cube: Cube,
    #[arg(long, env = "WG7_MATRIX", default_value = "paper", value_parser = parse_matrix)]
    pub matrix: MatrixSel,
    #[arg(long, value_enum, default_value_t = AndArg::Literal)]
    pub and_model: AndArg,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[command(flatten)]
    pub opts: ModelOpts,
    /// Key bit set to 1 (others 0); every key bit is free when omitted.
    #[arg(long)]
    pub key_bit: Option<usize>,
    /// Leave out the invertibility cuts.
    #[arg(long)]
    pub no_cuts: bool,
    #[arg(long, env = "WG7_OUT")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct EngineOpts {
    #[arg(long, env = "WG7_ENGINE", value_enum, default_value_t = Engine::Trail)]
    pub engine: Engine,
    /// Node budget per trail search.
    #[arg(long, env = "WG7_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// External solver, e.g. "python3 tools/highs_solve.py {lp} {sol}".
    #[arg(long, env = "WG7_SOLVER_CMD")]
    pub solver_cmd: Option<String>,
    /// Seconds per external solve.
    #[arg(long, default_value_t = 600)]
    pub timeout: u64,
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub opts: ModelOpts,
    #[command(flatten)]
    pub engine: EngineOpts,
    /// Also write the record here.
    #[arg(long, env = "WG7_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Applies to every `--cube`.
    #[arg(long, env = "WG7_ROUNDS")]
    pub rounds: Option<usize>,
    /// Repeatable.
    #[arg(long, value_parser = parse_cube)]
    pub cube: Vec<Cube>,
    /// Add the eight published cubes with their round counts.
    #[arg(long)]
    pub published: bool,
    #[arg(long, env = "WG7_MATRIX", default_value = "paper", value_parser = parse_matrix)]
    pub matrix: MatrixSel,
    #[arg(long, env = "WG7_BUDGET", default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// IV draws per cube before giving up on a constant superpoly.
    #[arg(long, default_value_t = 16)]
    pub trials: usize,
    /// Largest |J| for which the offline table is built.
    #[arg(long, default_value_t = wg7_core::cube::DEFAULT_TABLE_LIMIT)]
    pub max_j: usize,
    /// Directory for the report and resumable tables.
    #[arg(long, env = "WG7_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, env = "WG7_SOLVER_CMD")]
    pub solver_cmd: Option<String>,
    /// Inequality file to sweep instead of the built-in one.
    #[arg(long)]
    pub inequalities: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Trail,
    Milp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AndArg {
    Literal,
    Exact,
}

impl From<AndArg> for AndModel {
    fn from(a: AndArg) -> Self {
        match a {
            AndArg::Literal => AndModel::Literal,
            AndArg::Exact => AndModel::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cube(pub Vec<usize>);

fn parse_cube(s: &str) -> Result<Cube, String> {
    let mut v = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let i: usize = part.parse().map_err(|_| format!("bad index {part:?}"))?;
        if i >= 81 {
            return Err(format!("IV index {i} out of range (0..=80)"));
        }
        if v.contains(&i) {
            return Err(format!("duplicate index {i}"));
        }
        v.push(i);
    }
    v.sort_unstable();
    Ok(Cube(v))
}

fn parse_matrix(s: &str) -> Result<MatrixSel, String> {
    s.parse()
}

/// Exit codes.
pub mod exit {
    pub const USAGE: u8 = 2;
    pub const BUDGET: u8 = 3;
    pub const VERIFY: u8 = 4;
    pub const OTHER: u8 = 1;
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Budget(String),
    Verify(String),
    Other(String),
}

impl From<wg7_core::Error> for Failure {
    fn from(e: wg7_core::Error) -> Self {
        use wg7_core::Error as E;
        match e {
            E::Length { .. }
            | E::BadBit { .. }
            | E::BadChar { .. }
            | E::IndexRange { .. }
            | E::DuplicateIndex(_)
            | E::Parse { .. }
            | E::TableTooLarge { .. } => Failure::Usage(e.to_string()),
            E::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(exit::OTHER);
        }
    }
    let res = match &cli.command {
        Command::Keystream(a) => commands::keystream(&cli, a),
        Command::Model(a) => commands::model(&cli, a),
        Command::ExtractJ(a) => commands::extract_j(&cli, a),
        Command::Attack(a) => commands::attack(&cli, a),
        Command::Selftest(a) => selftest::run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (exit::USAGE, m),
                Failure::Budget(m) => (exit::BUDGET, m),
                Failure::Verify(m) => (exit::VERIFY, m),
                Failure::Other(m) => (exit::OTHER, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
