use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kite_node::{serve, NodeConfig};

/// Serve a Kite governance board over HTTP.
#[derive(Parser)]
#[command(name = "kite-node", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, default_value = "kite-data")]
    data_dir: PathBuf,
    #[arg(long, default_value = "ristretto255")]
    group: String,
    /// Suggested anonymity-set sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
    anonymity_sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    num_options: usize,
    /// Expect an out-of-process authority instead of holding keys here.
    #[arg(long)]
    external_authority: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let a = Args::parse();
    let config = NodeConfig {
        listen: a.listen,
        data_dir: a.data_dir,
        group: a.group,
        anonymity_sizes: a.anonymity_sizes,
        num_options: a.num_options,
        authority: !a.external_authority,
        seed: a.seed,
    };
    eprintln!("kite-node listening on {}", config.listen);
    match serve(config).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
