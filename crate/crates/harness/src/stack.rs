//! Auth and website served on loopback inside the current process, sharing
//! one manual clock so scenarios can move time deterministically.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use delegate_agent::{Agent, AgentConfig, TaskScript};
use delegate_auth::{AuthClient, AuthConfig, AuthService, Identity, SessionKeyId};
use delegate_core::{
    Clock, CryptoSpec, EntityName, ManualClock, SeededRandom, SharedRandom, TrustLevel,
};
use delegate_website::{HumanCredential, UserProfile, WebsiteConfig, WebsiteService};
use tokio::task::JoinHandle;

use crate::fixture::{
    agent_name, provision_fixture, FixtureDescription, FixtureKeys, FixtureSpec, WebsiteAdmin,
    USER, WEBSITE,
};
use crate::HarnessError;

pub const ADMIN_TOKEN: &str = "harness-admin";
pub const USER_PASSWORD: &str = "harness-user";

pub fn epoch() -> DateTime<Utc> {
    DateTime::from_timestamp(1_750_000_000, 0).expect("valid timestamp")
}

async fn serve(router: axum::Router) -> Result<(String, JoinHandle<()>), HarnessError> {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
        .await
        .map_err(|e| HarnessError::Infrastructure(format!("bind: {e}")))?;
    let addr = listener
        .local_addr()
        .map_err(|e| HarnessError::Infrastructure(e.to_string()))?;
    let handle = tokio::spawn(async move {
        let _ = axum::serve(listener, router).await;
    });
    Ok((format!("http://{addr}"), handle))
}

pub struct LocalStack {
    pub auth: Arc<AuthService>,
    pub website: Arc<WebsiteService>,
    pub clock: Arc<ManualClock>,
    pub auth_url: String,
    pub website_url: String,
    pub fixture: FixtureDescription,
    keys: FixtureKeys,
    seeds: AtomicU64,
    servers: Vec<JoinHandle<()>>,
}

impl Drop for LocalStack {
    fn drop(&mut self) {
        for s in &self.servers {
            s.abort();
        }
    }
}

impl LocalStack {
    /// Starts both services and provisions the fixture over HTTP. All
    /// randomness derives from `seed`.
    pub async fn start(spec: &FixtureSpec, seed: u64) -> Result<Self, HarnessError> {
        let seeds = AtomicU64::new(seed.wrapping_mul(1_000_003));
        let next = || Arc::new(SeededRandom::new(seeds.fetch_add(1, Ordering::Relaxed)));
        let clock = Arc::new(ManualClock::new(epoch()));
        let keys = FixtureKeys::generate(next().as_ref())?;

        let auth = Arc::new(AuthService::in_memory(clock.clone(), next(), AuthConfig::default()));
        let (auth_url, auth_server) = serve(delegate_auth::http::router(auth.clone(), ADMIN_TOKEN)).await?;

        let website_identity = Identity {
            name: EntityName::new(WEBSITE).expect("valid"),
            key: keys.get(WEBSITE).clone(),
            spec: CryptoSpec::default(),
        };
        let directory = AuthClient::new(&auth_url, clock.clone(), next()).with_identity(website_identity);
        let website = Arc::new(WebsiteService::new(
            UserProfile::demo(),
            vec![HumanCredential {
                username: USER.into(),
                password: USER_PASSWORD.into(),
            }],
            Arc::new(directory),
            clock.clone(),
            next(),
            WebsiteConfig::default(),
        ));
        let (website_url, website_server) =
            serve(delegate_website::http::router(website.clone(), None)).await?;

        let admin = AuthClient::new(&auth_url, clock.clone(), next()).with_admin_token(ADMIN_TOKEN);
        let site_admin = WebsiteAdmin::new(&website_url, USER, USER_PASSWORD);
        let fixture = provision_fixture(&admin, Some(&site_admin), spec, &keys).await?;
        let next_seed = seeds.load(Ordering::Relaxed);
        Ok(Self {
            auth,
            website,
            clock,
            auth_url,
            website_url,
            fixture,
            keys,
            seeds: AtomicU64::new(next_seed),
            servers: vec![auth_server, website_server],
        })
    }

    /// A random source no other signer in this stack has used.
    pub fn fresh_rng(&self) -> SharedRandom {
        Arc::new(SeededRandom::new(self.seeds.fetch_add(1, Ordering::Relaxed)))
    }

    pub fn keys(&self) -> &FixtureKeys {
        &self.keys
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub fn admin_client(&self) -> AuthClient {
        AuthClient::new(&self.auth_url, self.clock.clone(), self.fresh_rng()).with_admin_token(ADMIN_TOKEN)
    }

    pub fn website_admin(&self) -> WebsiteAdmin {
        WebsiteAdmin::new(&self.website_url, USER, USER_PASSWORD)
    }

    /// Auth client signing as the named fixture entity.
    pub fn client_for(&self, name: &str) -> AuthClient {
        AuthClient::new(&self.auth_url, self.clock.clone(), self.fresh_rng()).with_identity(Identity {
            name: EntityName::new(name).expect("fixture name"),
            key: self.keys.get(name).clone(),
            spec: CryptoSpec::default(),
        })
    }

    /// The user delegates access at `trust` to the website.
    pub async fn delegate(&self, trust: TrustLevel) -> Result<SessionKeyId, HarnessError> {
        self.client_for(USER)
            .create_delegation(trust, delegate_core::GroupName::websites(), "evaluation")
            .await
            .map(|c| c.session_key_id)
            .map_err(|e| HarnessError::Infrastructure(format!("delegation at {trust}: {e}")))
    }

    pub fn agent_config(&self, trust: TrustLevel) -> AgentConfig {
        let name = agent_name(trust);
        AgentConfig::new(
            EntityName::new(name).expect("fixture name"),
            trust.group(),
            self.keys.get(name).clone(),
            &self.auth_url,
            &self.website_url,
        )
        .expect("fixture agents are valid")
    }

    /// The agent of `trust`'s group set up to run `script`.
    pub fn agent(&self, trust: TrustLevel, script: TaskScript) -> Agent {
        Agent::new(self.agent_config(trust), script, self.clock.clone(), self.fresh_rng())
    }
}
