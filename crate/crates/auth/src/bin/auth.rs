use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration as StdDuration;

use anyhow::Context;
use chrono::Duration;
use clap::Parser;
use delegate_auth::{http, AuthConfig, AuthService};
use delegate_core::{Clock, OsRandom, SystemClock};

/// Key distribution service for delegated agent access.
#[derive(Debug, Parser)]
#[command(name = "delegate-auth", version)]
struct Args {
    #[arg(long, env = "AUTH_LISTEN", default_value = "127.0.0.1:7400")]
    listen: SocketAddr,
    /// Append-only event log; replayed on startup.
    #[arg(long, env = "AUTH_LOG_PATH", default_value = "auth-events.jsonl")]
    log_path: PathBuf,
    /// Bearer token for the provisioning endpoints.
    #[arg(long, env = "AUTH_ADMIN_TOKEN")]
    admin_token: String,
    #[arg(long, env = "AUTH_CLOCK_SKEW_SECS", default_value_t = 120)]
    clock_skew_secs: i64,
    #[arg(long, env = "AUTH_REPLAY_RETENTION_SECS", default_value_t = 600)]
    replay_retention_secs: i64,
    /// Interval of the background expired-key sweep.
    #[arg(long, env = "AUTH_PURGE_INTERVAL_SECS", default_value_t = 30)]
    purge_interval_secs: u64,
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let args = Args::parse();
    let config = AuthConfig {
        clock_skew: Duration::seconds(args.clock_skew_secs),
        replay_retention: Duration::seconds(args.replay_retention_secs),
        ..AuthConfig::default()
    };
    let clock = Arc::new(SystemClock);
    let service = Arc::new(
        AuthService::open(&args.log_path, clock.clone(), Arc::new(OsRandom), config)
            .with_context(|| format!("opening {}", args.log_path.display()))?,
    );

    let sweeper = service.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(StdDuration::from_secs(args.purge_interval_secs.max(1)));
        loop {
            tick.tick().await;
            match sweeper.purge_expired_keys(clock.now()) {
                Ok(0) => {}
                Ok(n) => tracing::info!(purged = n, "expired session keys purged"),
                Err(e) => tracing::error!(error = %e, "purge failed"),
            }
        }
    });

    let listener = tokio::net::TcpListener::bind(args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    tracing::info!(addr = %args.listen, "auth listening");
    axum::serve(listener, http::router(service, args.admin_token))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
