#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration as StdDuration;

use delegate_agent::{Agent, AgentConfig, TaskScript};
use delegate_auth::{
    AuthConfig, AuthOperation, AuthService, CommunicationPolicy, SessionKeyId, SignedRequest,
};
use delegate_core::{
    Clock, CryptoSpec, EntityName, GroupName, KeyMaterial, ManualClock, SeededRandom, TrustLevel,
};
use delegate_website::{ProfileField, UserProfile, WebsiteConfig, WebsiteService};

pub fn agent_for(trust: TrustLevel) -> &'static str {
    match trust {
        TrustLevel::High => "Business",
        TrustLevel::Medium => "Personal",
        TrustLevel::Low => "Casual",
    }
}

async fn serve(router: axum::Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router).await.unwrap() });
    format!("http://{addr}")
}

/// Auth and website on loopback sharing one manual clock.
pub struct Stack {
    pub auth: Arc<AuthService>,
    pub website: Arc<WebsiteService>,
    pub clock: Arc<ManualClock>,
    pub auth_url: String,
    pub site_url: String,
    pub keys: HashMap<&'static str, KeyMaterial>,
    seed: AtomicU64,
}

impl Stack {
    /// `relative` and `absolute` validity in seconds for every trust level.
    pub async fn start(seed: u64, relative: u64, absolute: u64) -> Self {
        let clock = Arc::new(ManualClock::new(chrono::DateTime::from_timestamp(1_750_000_000, 0).unwrap()));
        let auth = Arc::new(AuthService::in_memory(
            clock.clone(),
            Arc::new(SeededRandom::new(seed)),
            AuthConfig::default(),
        ));
        let mut keys = HashMap::new();
        for (n, g) in [
            ("userAlice", GroupName::users()),
            ("myWebsite", GroupName::websites()),
            ("Business", TrustLevel::High.group()),
            ("Personal", TrustLevel::Medium.group()),
            ("Casual", TrustLevel::Low.group()),
        ] {
            let (e, _) = auth
                .register_entity(EntityName::new(n).unwrap(), g, CryptoSpec::default(), None)
                .unwrap();
            keys.insert(n, e.distribution_key);
        }
        for trust in TrustLevel::ALL {
            auth.add_policy(CommunicationPolicy::delegation(
                GroupName::users(),
                trust.group(),
                GroupName::websites(),
                StdDuration::from_secs(relative),
                StdDuration::from_secs(absolute),
            ))
            .unwrap();
        }
        let auth_url = serve(delegate_auth::http::router(auth.clone(), "admin")).await;
        let directory = delegate_auth::AuthClient::new(&auth_url, clock.clone(), Arc::new(SeededRandom::new(seed + 1)))
            .with_identity(delegate_auth::Identity {
                name: EntityName::new("myWebsite").unwrap(),
                key: keys["myWebsite"].clone(),
                spec: CryptoSpec::default(),
            });
        let website = Arc::new(WebsiteService::new(
            UserProfile::demo(),
            Vec::new(),
            Arc::new(directory),
            clock.clone(),
            Arc::new(SeededRandom::new(seed + 2)),
            WebsiteConfig::default(),
        ));
        let site_url = serve(delegate_website::http::router(website.clone(), None)).await;
        Self {
            auth,
            website,
            clock,
            auth_url,
            site_url,
            keys,
            seed: AtomicU64::new(seed * 1000),
        }
    }

    /// A seed no other signer in this stack has used.
    fn fresh_seed(&self) -> u64 {
        self.seed.fetch_add(1, Ordering::Relaxed)
    }

    pub fn delegate(&self, trust: TrustLevel) -> SessionKeyId {
        let req = SignedRequest::sign(
            &EntityName::new("userAlice").unwrap(),
            &self.keys["userAlice"],
            &CryptoSpec::default(),
            self.clock.now(),
            &SeededRandom::new(self.fresh_seed()),
            &AuthOperation::CreateDelegation {
                trust,
                target_group: GroupName::websites(),
                purpose: String::new(),
            },
        )
        .unwrap();
        self.auth.create_delegated_session_key(&req).unwrap().session_key_id
    }

    pub fn config(&self, name: &'static str) -> AgentConfig {
        let group = self.auth.entity(&EntityName::new(name).unwrap()).unwrap().group;
        AgentConfig::new(
            EntityName::new(name).unwrap(),
            group,
            self.keys[name].clone(),
            &self.auth_url,
            &self.site_url,
        )
        .unwrap()
    }

    pub fn agent(&self, name: &'static str, id: SessionKeyId, fields: &[ProfileField], purchase: Option<&str>) -> Agent {
        let script = TaskScript::new(id, fields.iter().copied(), purchase.map(str::to_owned)).unwrap();
        Agent::new(
            self.config(name),
            script,
            self.clock.clone(),
            Arc::new(SeededRandom::new(self.fresh_seed())),
        )
    }
}
