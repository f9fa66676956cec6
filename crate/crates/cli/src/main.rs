//! `morphtok` command-line tool.
//!
//! Exit codes: 0 success, 1 data error, 2 usage or configuration error.

mod commands;
mod config;
mod error;
mod io;
mod report;

use clap::{ArgAction, Parser, Subcommand};

use commands::codec::{DecodeArgs, EncodeArgs};
use commands::evaltok::EvalTokCommand;
use commands::metrics::MetricsCommand;
use commands::train::TrainArgs;

#[derive(Debug, Parser)]
#[command(name = "morphtok", version, about = "Morphology-aware pre-tokenization and constrained BPE")]
struct Cli {
    /// More diagnostics on stderr (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn merges from a corpus.
    Train(TrainArgs),
    /// Tokenize text into the marker stream.
    Encode(EncodeArgs),
    /// Turn a marker stream back into text.
    Decode(DecodeArgs),
    /// Intrinsic tokenizer metrics and audits.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Human evaluation sheets.
    #[command(subcommand)]
    Evaltok(EvalTokCommand),
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Train(a) => commands::train::run(a),
        Command::Encode(a) => commands::codec::encode(a),
        Command::Decode(a) => commands::codec::decode(a),
        Command::Metrics(c) => commands::metrics::run(c),
        Command::Evaltok(c) => commands::evaltok::run(c),
    };
    if let Err(e) = result {
        eprintln!("morphtok: {e}");
        std::process::exit(e.exit_code());
    }
}
