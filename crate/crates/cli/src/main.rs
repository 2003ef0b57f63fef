//! `idlc`: batch driver for encoding, corrupting and decoding files and for
//! running calibration sweeps and security games.

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use insdel_ldc::composed::{DEFAULT_SAFE_ROUNDS, PRIV_CODEC};
use insdel_ldc::game::KeySchedule;

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "idlc", version = env!("IDLC_BUILD"), about = "Insertion-deletion locally decodable code experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Encode a file into a compiled-word container.
    Encode(EncodeArgs),
    /// Pass a container through a channel.
    Corrupt(CorruptArgs),
    /// Locally decode indices of a (possibly corrupted) container.
    Decode(DecodeArgs),
    /// Run a security game and write JSON and CSV reports.
    Game(GameArgs),
    /// Sweep channel rates and measure the compiler's failure terms.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// Message file; every byte contributes eight bits.
    input: PathBuf,
    #[arg(long, default_value = PRIV_CODEC)]
    codec: String,
    #[arg(long, default_value_t = 64)]
    lambda: u32,
    /// Key file; created (owner-only) if missing. Required by the private codec.
    #[arg(long)]
    key: Option<PathBuf>,
    /// Seeds key generation or, for the keyless codec, the hidden seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_SAFE_ROUNDS)]
    safe_rounds: u32,
    #[arg(long, default_value_t = 0)]
    registry_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CorruptArgs {
    input: PathBuf,
    /// Channel id, or `subprocess:<command>` for an external adversary.
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 0.0)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    input: PathBuf,
    #[arg(long)]
    key: Option<PathBuf>,
    /// Index to decode; repeatable. Without it every index is decoded.
    #[arg(long = "index")]
    indices: Vec<usize>,
    /// Decoder randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV file for the per-index values and query counts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleArg {
    OneTime,
    PerRound,
}

#[derive(Args, Debug)]
struct GameArgs {
    /// Load the whole experiment from a config file; other flags except --out are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = PRIV_CODEC)]
    codec: String,
    #[arg(long, default_value_t = 1024)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    lambda: u32,
    #[arg(long, default_value = "identity")]
    channel: String,
    /// Channel rate; defaults to the code's distance threshold.
    #[arg(long)]
    rate: Option<f64>,
    /// Distance threshold of the game; defaults to the code's.
    #[arg(long)]
    rho: Option<f64>,
    /// Success threshold of the game; defaults to the code's.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Independent games, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    games: usize,
    #[arg(long, value_enum, default_value = "per-round")]
    schedule: ScheduleArg,
    /// Parallel-round budget of the adversary (keyless codecs).
    #[arg(long)]
    budget_rounds: Option<u64>,
    /// Block targeted by white-box attacks; random if omitted.
    #[arg(long)]
    block: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SAFE_ROUNDS)]
    safe_rounds: u32,
    #[arg(long, default_value_t = 0)]
    registry_seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<out>.json` and `<out>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Hamming codeword length in bits.
    #[arg(long, default_value_t = 1024)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    lambda: u32,
    #[arg(long, default_value = "random-insdel")]
    channel: String,
    /// Comma-separated channel rates.
    #[arg(long, value_delimiter = ',', default_value = "0,0.0005,0.00075,0.001,0.00125,0.0015")]
    rates: Vec<f64>,
    /// Hamming radius the recovered word must stay within; defaults to the private code's.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<out>.json` and `<out>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn to_config(cmd: Cmd) -> Result<ExperimentConfig, CliError> {
    let base = ExperimentConfig::default();
    Ok(match cmd {
        Cmd::Encode(a) => ExperimentConfig {
            command: Command::Encode,
            codec: a.codec,
            lambda: a.lambda,
            safe_rounds: a.safe_rounds,
            registry_seed: a.registry_seed,
            seed: a.seed,
            input: Some(a.input),
            key: a.key,
            out: Some(a.out),
            ..base
        },
        Cmd::Corrupt(a) => ExperimentConfig {
            command: Command::Corrupt,
            channel: a.channel,
            rate: Some(a.rate),
            seed: Some(a.seed),
            input: Some(a.input),
            out: Some(a.out),
            ..base
        },
        Cmd::Decode(a) => ExperimentConfig {
            command: Command::Decode,
            indices: a.indices,
            seed: Some(a.seed),
            input: Some(a.input),
            key: a.key,
            out: a.out,
            ..base
        },
        Cmd::Game(a) => {
            if let Some(path) = a.config {
                let text = std::fs::read_to_string(&path)?;
                let mut cfg = ExperimentConfig::from_json(&text)?;
                cfg.command = Command::Game;
                if a.out.is_some() {
                    cfg.out = a.out;
                }
                return Ok(cfg);
            }
            ExperimentConfig {
                command: Command::Game,
                codec: a.codec,
                k: a.k,
                lambda: a.lambda,
                safe_rounds: a.safe_rounds,
                registry_seed: a.registry_seed,
                channel: a.channel,
                rate: a.rate,
                rho: a.rho,
                p: a.p,
                rounds: a.rounds,
                games: a.games,
                schedule: match a.schedule {
                    ScheduleArg::OneTime => KeySchedule::OneTime,
                    ScheduleArg::PerRound => KeySchedule::PerRound,
                },
                budget_rounds: a.budget_rounds,
                block: a.block,
                trials: a.trials,
                confidence: a.confidence,
                seed: Some(a.seed),
                out: a.out,
                ..base
            }
        }
        Cmd::Calibrate(a) => ExperimentConfig {
            command: Command::Calibrate,
            k: a.k,
            lambda: a.lambda,
            channel: a.channel,
            rates: a.rates,
            rho: a.rho,
            trials: a.trials,
            confidence: a.confidence,
            seed: Some(a.seed),
            out: a.out,
            ..base
        },
    })
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("IDLC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("IDLC_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Other(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = to_config(cli.cmd)?;
    cfg.validate()?;
    match cfg.command {
        Command::Encode => commands::encode(&cfg),
        Command::Corrupt => commands::corrupt(&cfg),
        Command::Decode => commands::decode(&cfg),
        Command::Game => commands::game(&cfg),
        Command::Calibrate => commands::calibrate(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("idlc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
