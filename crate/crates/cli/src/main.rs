use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modernzh_core::config::SCHEMA_VERSION;
use modernzh_core::Error;

mod commands;
mod context;
mod inputs;

use commands::{bench, corpus, enc, mask, sched, tok, train};
use context::Context;

const EXIT_CONFIG: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_RUNTIME: u8 = 5;

fn version() -> &'static str {
    Box::leak(format!("{} (config schema {SCHEMA_VERSION})", env!("CARGO_PKG_VERSION")).into_boxed_str())
}

#[derive(Parser)]
#[command(name = "modernzh", version = version(), about = "Chinese encoder pre-training toolkit")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Increase log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenizer training, encoding and statistics.
    #[command(subcommand)]
    Tok(tok::TokCommand),
    /// Masking previews and curriculum curves.
    #[command(subcommand)]
    Mask(mask::MaskCommand),
    /// Learning-rate schedules.
    #[command(subcommand)]
    Sched(sched::SchedCommand),
    /// Encoder checkpoints.
    #[command(subcommand)]
    Enc(enc::EncCommand),
    /// Training stages and pseudo-perplexity.
    #[command(subcommand)]
    Train(train::TrainCommand),
    /// Corpus preparation and mixture sampling.
    #[command(subcommand)]
    Corpus(corpus::CorpusCommand),
    /// Throughput and similarity benchmarks.
    #[command(subcommand)]
    Bench(bench::BenchCommand),
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Input(_) => EXIT_INPUT,
        Error::Runtime(_) => EXIT_RUNTIME,
        Error::Io { source, .. } => match source.kind() {
            std::io::ErrorKind::NotFound | std::io::ErrorKind::InvalidData => EXIT_INPUT,
            _ => EXIT_RUNTIME,
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = Context::new(cli.config.as_deref(), cli.seed).and_then(|ctx| match cli.command {
        Command::Tok(c) => tok::run(&ctx, c),
        Command::Mask(c) => mask::run(&ctx, c),
        Command::Sched(c) => sched::run(&ctx, c),
        Command::Enc(c) => enc::run(&ctx, c),
        Command::Train(c) => train::run(&ctx, c),
        Command::Corpus(c) => corpus::run(&ctx, c),
        Command::Bench(c) => bench::run(&ctx, c),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
