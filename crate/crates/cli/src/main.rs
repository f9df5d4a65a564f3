mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RegimeArg;

#[derive(Debug, Parser)]
#[command(name = "scopegnn", version, about = "Subgraph-scoped GNN toolkit")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with the command's settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert TSV inputs (or an existing bundle) into a graph bundle.
    Convert(ConvertArgs),
    /// Extract subgraphs and write a cache.
    Extract(ExtractArgs),
    /// Train a model and write a checkpoint plus per-epoch metrics.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split.
    Eval(EvalArgs),
    /// Report inference MACs.
    Cost(CostArgs),
    /// Run the numerical check suite; exits 2 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub common: Common,
    /// Bundle or TSV directory to re-encode.
    #[arg(long, conflicts_with = "edges")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub edges: Option<PathBuf>,
    #[arg(long)]
    pub feats: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub num_nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractFlags {
    /// Use personalized-PageRank top-k extraction with this k.
    #[arg(long, conflicts_with = "depth")]
    pub top_k: Option<usize>,
    /// Use k-hop extraction with this depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Neighbour budget for k-hop extraction.
    #[arg(long, requires = "depth")]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub method: ExtractFlags,
    /// Only extract for nodes of this split (train, val or test).
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[command(flatten)]
    pub method: ExtractFlags,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<scopegnn_core::model::Arch>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[command(flatten)]
    pub method: ExtractFlags,
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_parser = parse_arch)]
    pub arch: Option<scopegnn_core::model::Arch>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dim: Option<u64>,
    #[arg(long)]
    pub classes: Option<u64>,
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    /// `hop:<L>` or the path of a subgraph cache.
    #[arg(long)]
    pub scope_from: Option<String>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub max_targets: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Include the large-graph cost comparison and the SGC depth sweep.
    #[arg(long)]
    pub full: bool,
}

fn parse_arch(s: &str) -> Result<scopegnn_core::model::Arch, String> {
    use scopegnn_core::model::Arch;
    match s.to_ascii_lowercase().as_str() {
        "gcn" => Ok(Arch::Gcn),
        "sage" => Ok(Arch::Sage),
        "gat" => Ok(Arch::Gat),
        "gin" => Ok(Arch::Gin),
        "sgc" => Ok(Arch::Sgc),
        other => Err(format!("unknown architecture {other:?}; expected gcn, sage, gat, gin or sgc")),
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
    let result = match &cli.command {
        Command::Convert(a) => commands::convert(a),
        Command::Extract(a) => commands::extract(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Cost(a) => commands::cost(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::ChecksFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
