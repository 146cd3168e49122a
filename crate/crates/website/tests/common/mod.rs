#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration as StdDuration;

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use delegate_auth::{
    AuthConfig, AuthError, AuthOperation, AuthService, CommunicationPolicy, SessionKeyId,
    SessionKeyResponse, SignedRequest,
};
use delegate_core::{
    compute_hmac, Clock, CryptoSpec, EntityName, GroupName, HmacTag, KeyMaterial, ManualClock,
    Nonce, SeededRandom, TrustLevel,
};
use delegate_website::{
    HumanCredential, KeyDirectory, SessionIssued, UserProfile, WebsiteConfig, WebsiteError,
    WebsiteService,
};

pub const WEBSITE: &str = "myWebsite";
pub const USER: &str = "userAlice";
pub const PASSWORD: &str = "correct horse battery staple";

pub fn start() -> DateTime<Utc> {
    DateTime::from_timestamp(1_750_000_000, 0).unwrap()
}

pub fn name(s: &str) -> EntityName {
    EntityName::new(s).unwrap()
}

pub fn agent_for(trust: TrustLevel) -> &'static str {
    match trust {
        TrustLevel::High => "Business",
        TrustLevel::Medium => "Personal",
        TrustLevel::Low => "Casual",
    }
}

pub fn owner() -> HumanCredential {
    HumanCredential {
        username: USER.into(),
        password: PASSWORD.into(),
    }
}

/// Signs redemptions as the website and calls an in-process Auth.
pub struct LocalDirectory {
    auth: Arc<AuthService>,
    clock: Arc<ManualClock>,
    rng: SeededRandom,
    pub calls: AtomicU64,
    pub delay: Option<StdDuration>,
}

#[async_trait]
impl KeyDirectory for LocalDirectory {
    async fn redeem(&self, id: SessionKeyId) -> Result<SessionKeyResponse, WebsiteError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(d) = self.delay {
            tokio::time::sleep(d).await;
        }
        let me = self.auth.entity(&name(WEBSITE)).unwrap();
        let req = SignedRequest::sign(
            &me.name,
            &me.distribution_key,
            &me.dist_key_spec,
            self.clock.now(),
            &self.rng,
            &AuthOperation::RequestSessionKey { id },
        )
        .unwrap();
        self.auth.request_session_key(&req).map_err(|e| match e {
            AuthError::Expired(id) => WebsiteError::KeyExpired(id),
            other => WebsiteError::Authentication(other.to_string()),
        })
    }
}

pub struct World {
    pub auth: Arc<AuthService>,
    pub clock: Arc<ManualClock>,
    pub rng: SeededRandom,
    pub website: Arc<WebsiteService>,
    pub directory: Arc<LocalDirectory>,
    pub keys: HashMap<&'static str, KeyMaterial>,
}

impl World {
    /// Relative validity (seconds) per trust level: High, Medium, Low.
    pub fn new(validity: [u64; 3]) -> Self {
        Self::with_delay(validity, None)
    }

    pub fn with_delay(validity: [u64; 3], delay: Option<StdDuration>) -> Self {
        let clock = Arc::new(ManualClock::new(start()));
        let auth = Arc::new(AuthService::in_memory(
            clock.clone(),
            Arc::new(SeededRandom::new(11)),
            AuthConfig::default(),
        ));
        let mut keys = HashMap::new();
        for (n, g) in [
            (USER, GroupName::users()),
            (WEBSITE, GroupName::websites()),
            ("Business", TrustLevel::High.group()),
            ("Personal", TrustLevel::Medium.group()),
            ("Casual", TrustLevel::Low.group()),
        ] {
            let (e, _) = auth.register_entity(name(n), g, CryptoSpec::default(), None).unwrap();
            keys.insert(n, e.distribution_key);
        }
        for (trust, rel) in TrustLevel::ALL.into_iter().zip(validity) {
            auth.add_policy(CommunicationPolicy::delegation(
                GroupName::users(),
                trust.group(),
                GroupName::websites(),
                StdDuration::from_secs(rel),
                StdDuration::from_secs(rel * 24),
            ))
            .unwrap();
        }
        let directory = Arc::new(LocalDirectory {
            auth: auth.clone(),
            clock: clock.clone(),
            rng: SeededRandom::new(12),
            calls: AtomicU64::new(0),
            delay,
        });
        let website = Arc::new(WebsiteService::new(
            UserProfile::demo(),
            vec![owner()],
            directory.clone(),
            clock.clone(),
            Arc::new(SeededRandom::new(13)),
            WebsiteConfig::default(),
        ));
        Self {
            auth,
            clock,
            rng: SeededRandom::new(14),
            website,
            directory,
            keys,
        }
    }

    pub fn signed(&self, sender: &'static str, op: AuthOperation) -> SignedRequest {
        SignedRequest::sign(
            &name(sender),
            &self.keys[sender],
            &CryptoSpec::default(),
            self.clock.now(),
            &self.rng,
            &op,
        )
        .unwrap()
    }

    pub fn delegate(&self, trust: TrustLevel) -> SessionKeyId {
        let req = self.signed(
            USER,
            AuthOperation::CreateDelegation {
                trust,
                target_group: GroupName::websites(),
                purpose: String::new(),
            },
        );
        self.auth.create_delegated_session_key(&req).unwrap().session_key_id
    }

    /// The agent's own redemption of `id`.
    pub fn agent_redeem(&self, agent: &'static str, id: SessionKeyId) -> SessionKeyResponse {
        let req = self.signed(agent, AuthOperation::RequestSessionKey { id });
        self.auth.request_session_key(&req).unwrap()
    }

    /// Delegates at `trust` and has the matching agent collect the key.
    pub fn delegated_key(&self, trust: TrustLevel) -> (SessionKeyId, KeyMaterial) {
        let id = self.delegate(trust);
        let resp = self.agent_redeem(agent_for(trust), id);
        (id, resp.key)
    }

    pub fn tag(key: &KeyMaterial, nonce: &Nonce) -> HmacTag {
        compute_hmac(&CryptoSpec::default(), key, nonce.as_bytes()).unwrap()
    }

    pub async fn login(&self, id: SessionKeyId, key: &KeyMaterial) -> Result<SessionIssued, WebsiteError> {
        let c = self.website.issue_challenge().unwrap();
        self.website
            .authenticate_agent(&c.challenge_id, id, &Self::tag(key, &c.nonce))
            .await
    }

    pub async fn session(&self, trust: TrustLevel) -> SessionIssued {
        let (id, key) = self.delegated_key(trust);
        self.login(id, &key).await.unwrap()
    }

    pub fn advance(&self, d: chrono::Duration) {
        self.clock.advance(d);
    }
}
