use std::time::Duration;

use clap::Parser;
use skbd_server::{router, Settings};

#[derive(Parser)]
#[command(
    name = "skbd-server",
    version,
    about = "HTTP API for shared Keyboard designs"
)]
struct Args {
    #[arg(long, env = "SKBD_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "SKBD_BIND", default_value = "127.0.0.1")]
    bind: String,
    /// Worker threads per simulation.
    #[arg(long, env = "SKBD_THREADS")]
    threads: Option<usize>,
    /// Simulations allowed to run at once.
    #[arg(long, default_value_t = 1)]
    concurrent_jobs: usize,
    /// Seconds a finished job stays available.
    #[arg(long, default_value_t = 3600)]
    job_ttl: u64,
    /// Browser origin allowed by CORS; any origin when omitted.
    #[arg(long, env = "SKBD_CORS_ORIGIN")]
    cors_origin: Option<String>,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let settings = Settings {
        threads: args.threads,
        concurrent_jobs: args.concurrent_jobs,
        job_ttl: Duration::from_secs(args.job_ttl),
        cors_origin: args.cors_origin,
    };
    let addr = format!("{}:{}", args.bind, args.port);
    let listener = match tokio::net::TcpListener::bind(&addr).await {
        Ok(l) => l,
        Err(e) => {
            log::error!("cannot bind {addr}: {e}");
            std::process::exit(1);
        }
    };
    log::info!("listening on {addr}");
    if let Err(e) = axum::serve(listener, router(&settings)).await {
        log::error!("server stopped: {e}");
        std::process::exit(1);
    }
}
