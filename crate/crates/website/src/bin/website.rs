use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration as StdDuration;

use anyhow::Context;
use clap::Parser;
use delegate_auth::{AuthClient, Identity};
use delegate_core::{Clock, CryptoSpec, EntityName, KeyMaterial, OsRandom, SystemClock};
use delegate_website::{http, HumanCredential, UserProfile, WebsiteConfig, WebsiteService};

/// Website backend that authenticates agents with delegated session keys.
#[derive(Debug, Parser)]
#[command(name = "delegate-website", version)]
struct Args {
    #[arg(long, env = "WEBSITE_LISTEN", default_value = "127.0.0.1:7500")]
    listen: SocketAddr,
    #[arg(long, env = "WEBSITE_AUTH_URL", default_value = "http://127.0.0.1:7400")]
    auth_url: String,
    /// Entity name the website is registered under in Auth.
    #[arg(long, env = "WEBSITE_ENTITY", default_value = "myWebsite")]
    entity: EntityName,
    /// File holding the website's distribution key as hex.
    #[arg(long, env = "WEBSITE_KEY_PATH")]
    key_path: PathBuf,
    /// JSON user profile; the built-in demo profile is used when absent.
    #[arg(long, env = "WEBSITE_PROFILE")]
    profile: Option<PathBuf>,
    /// Password of the profile owner for the human-facing endpoints.
    #[arg(long, env = "WEBSITE_USER_PASSWORD")]
    user_password: String,
    /// Distribution key (hex file) of the profile owner; enables
    /// `POST /api/delegations`.
    #[arg(long, env = "WEBSITE_DELEGATOR_KEY_PATH")]
    delegator_key_path: Option<PathBuf>,
    /// Directory of static assets for the browser UI.
    #[arg(long, env = "WEBSITE_STATIC_DIR")]
    static_dir: Option<PathBuf>,
    #[arg(long, env = "WEBSITE_SWEEP_INTERVAL_SECS", default_value_t = 1)]
    sweep_interval_secs: u64,
}

fn read_key(path: &Path) -> anyhow::Result<KeyMaterial> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    KeyMaterial::from_hex(text.trim()).with_context(|| format!("parsing key in {}", path.display()))
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let args = Args::parse();
    let clock = Arc::new(SystemClock);
    let rng = Arc::new(OsRandom);

    let profile = match &args.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => UserProfile::demo(),
    };
    let website_client = AuthClient::new(&args.auth_url, clock.clone(), rng.clone()).with_identity(Identity {
        name: args.entity.clone(),
        key: read_key(&args.key_path)?,
        spec: CryptoSpec::default(),
    });
    let humans = vec![HumanCredential {
        username: profile.user.to_string(),
        password: args.user_password.clone(),
    }];
    let owner = profile.user.clone();
    let mut service = WebsiteService::new(
        profile,
        humans,
        Arc::new(website_client),
        clock.clone(),
        rng.clone(),
        WebsiteConfig::default(),
    );
    if let Some(path) = &args.delegator_key_path {
        let client = AuthClient::new(&args.auth_url, clock.clone(), rng.clone()).with_identity(Identity {
            name: owner,
            key: read_key(path)?,
            spec: CryptoSpec::default(),
        });
        service = service.with_delegator(Arc::new(client));
    }
    let service = Arc::new(service);

    let sweeper = service.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(StdDuration::from_secs(args.sweep_interval_secs.max(1)));
        loop {
            tick.tick().await;
            let n = sweeper.expire_sessions(clock.now());
            if n > 0 {
                tracing::info!(terminated = n, "expired agent sessions");
            }
        }
    });

    let listener = tokio::net::TcpListener::bind(args.listen)
        .await
        .with_context(|| format!("binding {}", args.listen))?;
    tracing::info!(addr = %args.listen, "website listening");
    axum::serve(listener, http::router(service, args.static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
