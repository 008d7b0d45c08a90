use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use xlabel_core::ebm::TrainConfig;
use xlabel_core::ncd::ClinicalLists;
use xlabel_service::{serve, AppState, DATA_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "xlabel-serve", version, about = "Labeling service over HTTP+JSON")]
struct Cli {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: PathBuf,
    /// Keyword / ICD-10 / drug list file; the bundled lists when absent.
    #[arg(long)]
    lists: Option<PathBuf>,
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let lists = match &cli.lists {
        Some(p) => match ClinicalLists::from_path(p) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => ClinicalLists::default(),
    };
    let state = match AppState::open(&cli.data_dir, lists, TrainConfig::default()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot open {}: {e}", cli.data_dir.display());
            return ExitCode::FAILURE;
        }
    };
    let listener = match tokio::net::TcpListener::bind((cli.host.as_str(), cli.port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {}:{}: {e}", cli.host, cli.port);
            return ExitCode::FAILURE;
        }
    };
    log::info!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
    if let Err(e) = serve(listener, state, shutdown_signal()).await {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
