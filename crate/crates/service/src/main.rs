use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use glc_service::{router, AppState, ServiceConfig};

/// Serve the GLC workbench API.
#[derive(Parser)]
#[command(name = "glc-server", version)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// Directory for persisted sessions. Sessions live in memory only when omitted.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Concurrent jobs.
    #[arg(long)]
    workers: Option<usize>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let args = Args::parse();
    let mut config = ServiceConfig {
        store: args.store,
        ..ServiceConfig::default()
    };
    if let Some(w) = args.workers {
        config.workers = w;
    }
    let state = AppState::new(&config)?;
    tracing::info!(sessions = state.session_count(), "loaded store");
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).await
}
