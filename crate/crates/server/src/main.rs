use clap::Parser;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "ccb-server",
    version,
    about = "Serve ccb partitioning over HTTP/JSON"
)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Worker threads for the numerical kernels (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Solves allowed to run at once.
    #[arg(long)]
    max_concurrent: Option<usize>,
    /// Largest accepted request body, in MiB.
    #[arg(long, default_value_t = 256)]
    body_limit_mb: usize,
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();
    if args.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
        {
            tracing::warn!(error = %e, "could not size the worker pool");
        }
    }
    let mut config = ccb_server::ServerConfig {
        body_limit_bytes: args.body_limit_mb << 20,
        ..Default::default()
    };
    if let Some(m) = args.max_concurrent {
        config.max_concurrent = m;
    }
    let listener = match tokio::net::TcpListener::bind(&args.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("ccb-server: cannot bind {}: {e}", args.bind);
            std::process::exit(1);
        }
    };
    tracing::info!(addr = %args.bind, "listening");
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = ccb_server::serve(listener, config, shutdown).await {
        eprintln!("ccb-server: {e}");
        std::process::exit(1);
    }
}
