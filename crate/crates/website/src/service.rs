//! Website backend state: login challenges, agent sessions, scopes, the
//! simulated purchase log and the cache of keys fetched from Auth.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Duration, Utc};
use delegate_auth::{AuthClient, SessionKeyId};
use delegate_core::{
    compute_hmac, constant_time_equal, generate_nonce, EntityName, GroupName, HmacTag,
    SharedClock, SharedRandom, TrustLevel,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::directory::KeyDirectory;
use crate::model::{
    AgentSession, AuditEvent, AuditKind, CachedWebsiteKey, Challenge, ChallengeIssued,
    DelegationRecord, ProfileField, PurchaseRecord, PurchaseStatus, ScopePolicy, SessionIssued,
    SessionView, UserProfile,
};
use crate::WebsiteError;

pub const CHALLENGE_TTL_SECS: i64 = 120;
const TOKEN_BYTES: usize = 32;
const CHALLENGE_ID_BYTES: usize = 16;

#[derive(Debug, Clone)]
pub struct WebsiteConfig {
    pub challenge_ttl: Duration,
}

impl Default for WebsiteConfig {
    fn default() -> Self {
        Self {
            challenge_ttl: Duration::seconds(CHALLENGE_TTL_SECS),
        }
    }
}

/// A username/password pair for the human-facing endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumanCredential {
    pub username: String,
    pub password: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebsiteStats {
    pub agent_requests: u64,
    pub auth_redemptions: u64,
    pub redemptions_by_key: BTreeMap<SessionKeyId, u64>,
    pub active_sessions: usize,
}

#[derive(Default)]
struct State {
    challenges: HashMap<String, Challenge>,
    sessions: HashMap<String, AgentSession>,
    scopes: BTreeMap<GroupName, ScopePolicy>,
    purchases: Vec<PurchaseRecord>,
    audit: Vec<AuditEvent>,
    delegations: Vec<DelegationRecord>,
    next_session_id: u64,
}

impl State {
    fn audit(&mut self, at: DateTime<Utc>, kind: AuditKind, agent: Option<&EntityName>, detail: impl Into<String>) {
        self.audit.push(AuditEvent {
            at,
            kind,
            agent: agent.cloned(),
            detail: detail.into(),
        });
    }

    /// Looks up a live session, terminating it if its lifetime has elapsed.
    fn live_session(&mut self, token: &str, now: DateTime<Utc>) -> Result<AgentSession, WebsiteError> {
        let session = self.sessions.get(token).cloned().ok_or(WebsiteError::SessionInvalid)?;
        if session.is_expired(now) {
            self.sessions.remove(token);
            self.audit(now, AuditKind::SessionExpired, Some(&session.agent), format!("session {}", session.session_id));
            return Err(WebsiteError::SessionExpired);
        }
        Ok(session)
    }
}

type KeySlot = Arc<tokio::sync::Mutex<Option<CachedWebsiteKey>>>;

pub struct WebsiteService {
    state: Mutex<State>,
    profile: UserProfile,
    humans: HashMap<String, [u8; 32]>,
    key_slots: Mutex<HashMap<SessionKeyId, KeySlot>>,
    directory: Arc<dyn KeyDirectory>,
    delegator: Option<Arc<AuthClient>>,
    redemptions: Mutex<BTreeMap<SessionKeyId, u64>>,
    agent_requests: AtomicU64,
    clock: SharedClock,
    rng: SharedRandom,
    config: WebsiteConfig,
}

impl WebsiteService {
    pub fn new(
        profile: UserProfile,
        humans: Vec<HumanCredential>,
        directory: Arc<dyn KeyDirectory>,
        clock: SharedClock,
        rng: SharedRandom,
        config: WebsiteConfig,
    ) -> Self {
        let state = State {
            scopes: ScopePolicy::default_map()
                .into_iter()
                .map(|p| (p.agent_group.clone(), p))
                .collect(),
            next_session_id: 1,
            ..State::default()
        };
        Self {
            state: Mutex::new(state),
            profile,
            humans: humans
                .into_iter()
                .map(|h| (h.username, Sha256::digest(h.password.as_bytes()).into()))
                .collect(),
            key_slots: Mutex::new(HashMap::new()),
            directory,
            delegator: None,
            redemptions: Mutex::new(BTreeMap::new()),
            agent_requests: AtomicU64::new(0),
            clock,
            rng,
            config,
        }
    }

    /// Auth client signing as the profile owner, used to create delegations
    /// on the human user's behalf.
    pub fn with_delegator(mut self, client: Arc<AuthClient>) -> Self {
        self.delegator = Some(client);
        self
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub(crate) fn note_agent_request(&self) {
        self.agent_requests.fetch_add(1, Ordering::Relaxed);
    }

    fn random_hex(&self, len: usize) -> Result<String, WebsiteError> {
        Ok(hex::encode(self.rng.bytes(len)?))
    }

    pub fn issue_challenge(&self) -> Result<ChallengeIssued, WebsiteError> {
        let nonce = generate_nonce(self.rng.as_ref())?;
        let challenge_id = self.random_hex(CHALLENGE_ID_BYTES)?;
        let now = self.clock.now();
        let mut state = self.state.lock().unwrap();
        let ttl = self.config.challenge_ttl;
        state.challenges.retain(|_, c| !c.consumed && now < c.issued_at + ttl);
        state.challenges.insert(
            challenge_id.clone(),
            Challenge {
                challenge_id: challenge_id.clone(),
                nonce: nonce.clone(),
                issued_at: now,
                consumed: false,
            },
        );
        Ok(ChallengeIssued { challenge_id, nonce })
    }

    /// Verifies `tag == HMAC(session key, nonce)` and opens a session whose
    /// lifetime is the relative validity delivered by Auth. The challenge is
    /// consumed whatever the outcome.
    pub async fn authenticate_agent(
        &self,
        challenge_id: &str,
        session_key_id: SessionKeyId,
        tag: &HmacTag,
    ) -> Result<SessionIssued, WebsiteError> {
        let nonce = {
            let now = self.clock.now();
            let mut state = self.state.lock().unwrap();
            let challenge = state
                .challenges
                .get_mut(challenge_id)
                .ok_or(WebsiteError::ChallengeUnknown)?;
            if challenge.consumed {
                return Err(WebsiteError::ChallengeConsumed);
            }
            challenge.consumed = true;
            if now >= challenge.issued_at + self.config.challenge_ttl {
                return Err(WebsiteError::ChallengeExpired);
            }
            challenge.nonce.clone()
        };

        let outcome = async {
            let key = self.fetch_key_from_auth(session_key_id).await?;
            let expected = compute_hmac(&key.crypto, &key.key, nonce.as_bytes())?;
            if !constant_time_equal(expected.as_bytes(), tag.as_bytes()) {
                return Err(WebsiteError::Authentication("HMAC mismatch".into()));
            }
            Ok(key)
        }
        .await;

        let now = self.clock.now();
        let mut state = self.state.lock().unwrap();
        let key = match outcome {
            Ok(key) => key,
            Err(e) => {
                state.audit(now, AuditKind::LoginFailed, None, format!("key {session_key_id}: {e}"));
                return Err(match e {
                    WebsiteError::Upstream(_) | WebsiteError::Internal(_) => e,
                    WebsiteError::KeyExpired(_) => e,
                    other => WebsiteError::Authentication(other.to_string()),
                });
            }
        };
        let relative = Duration::from_std(key.relative_validity)
            .map_err(|e| WebsiteError::Internal(e.to_string()))?;
        let session = AgentSession {
            session_id: state.next_session_id,
            session_token: self.random_hex(TOKEN_BYTES)?,
            agent: key.agent_owner.entity.clone(),
            agent_group: key.agent_owner.group.clone(),
            session_key_id,
            started_at: now,
            expires_at: now + relative,
        };
        state.next_session_id += 1;
        state.audit(
            now,
            AuditKind::LoginSucceeded,
            Some(&session.agent),
            format!("session {} via key {session_key_id}", session.session_id),
        );
        let issued = SessionIssued {
            session_token: session.session_token.clone(),
            expires_at: session.expires_at,
            agent: session.agent.clone(),
            agent_group: session.agent_group.clone(),
        };
        state.sessions.insert(session.session_token.clone(), session);
        Ok(issued)
    }

    /// Returns the cached key for `id`, or redeems it from Auth once and
    /// caches it. Concurrent callers for the same id share one Auth call.
    pub async fn fetch_key_from_auth(&self, id: SessionKeyId) -> Result<CachedWebsiteKey, WebsiteError> {
        let slot = self
            .key_slots
            .lock()
            .unwrap()
            .entry(id)
            .or_default()
            .clone();
        let mut cached = slot.lock().await;
        if let Some(key) = cached.as_ref() {
            if self.clock.now() >= key.absolute_expiration {
                *cached = None;
                self.key_slots.lock().unwrap().remove(&id);
                return Err(WebsiteError::KeyExpired(id));
            }
            return Ok(key.clone());
        }

        *self.redemptions.lock().unwrap().entry(id).or_default() += 1;
        let resp = self.directory.redeem(id).await?;
        let delegatee = resp
            .expected_owner_groups
            .first()
            .ok_or_else(|| WebsiteError::Authentication(format!("key {id} has no owner groups")))?;
        let agent_owner = resp
            .prior_owners
            .iter()
            .find(|o| &o.group == delegatee)
            .cloned()
            .ok_or_else(|| WebsiteError::Authentication(format!("key {id} has no agent owner")))?;
        let key = CachedWebsiteKey {
            session_key_id: id,
            key: resp.key,
            crypto: resp.crypto,
            agent_owner,
            relative_validity: resp.relative_validity,
            absolute_expiration: resp.absolute_expiration,
        };
        *cached = Some(key.clone());
        Ok(key)
    }

    pub fn get_profile_field(&self, token: &str, field: ProfileField) -> Result<String, WebsiteError> {
        let now = self.clock.now();
        let mut state = self.state.lock().unwrap();
        let session = state.live_session(token, now)?;
        let allowed = state
            .scopes
            .get(&session.agent_group)
            .is_some_and(|s| s.allows(field));
        if !allowed {
            state.audit(now, AuditKind::FieldDenied, Some(&session.agent), field.as_str());
            return Err(WebsiteError::Denied(format!(
                "{} may not read {field}",
                session.agent_group
            )));
        }
        state.audit(now, AuditKind::FieldRead, Some(&session.agent), field.as_str());
        Ok(self.profile.field(field).to_owned())
    }

    pub fn execute_purchase(&self, token: &str, item: &str) -> Result<PurchaseRecord, WebsiteError> {
        let item = item.trim();
        if item.is_empty() {
            return Err(WebsiteError::Invalid("item must not be empty".into()));
        }
        let now = self.clock.now();
        let mut state = self.state.lock().unwrap();
        let session = state.live_session(token, now)?;
        let may_purchase = state
            .scopes
            .get(&session.agent_group)
            .is_some_and(|s| s.may_purchase);
        if !may_purchase {
            state.audit(now, AuditKind::PurchaseDenied, Some(&session.agent), item);
            return Err(WebsiteError::Denied(format!(
                "{} may not purchase",
                session.agent_group
            )));
        }
        let record = PurchaseRecord {
            id: state.purchases.len() as u64 + 1,
            session_id: session.session_id,
            agent: session.agent.clone(),
            item: item.to_owned(),
            shipping_address: self.profile.address.clone(),
            card: self.profile.card.clone(),
            phone: self.profile.phone.clone(),
            placed_at: now,
            status: PurchaseStatus::Simulated,
        };
        state.purchases.push(record.clone());
        state.audit(now, AuditKind::PurchaseCompleted, Some(&session.agent), item);
        Ok(record)
    }

    /// Checks a human credential; only the profile owner may manage scopes.
    pub fn authenticate_human(&self, cred: &HumanCredential) -> Result<(), WebsiteError> {
        let digest: [u8; 32] = Sha256::digest(cred.password.as_bytes()).into();
        let ok = self
            .humans
            .get(&cred.username)
            .is_some_and(|stored| constant_time_equal(stored, &digest));
        if !ok || cred.username != self.profile.user.as_str() {
            return Err(WebsiteError::Unauthorized);
        }
        Ok(())
    }

    pub fn configure_scope(
        &self,
        cred: &HumanCredential,
        agent_group: GroupName,
        allowed_fields: impl IntoIterator<Item = ProfileField>,
        may_purchase: bool,
    ) -> Result<ScopePolicy, WebsiteError> {
        self.authenticate_human(cred)?;
        let policy = ScopePolicy::new(agent_group, allowed_fields, may_purchase)?;
        let now = self.clock.now();
        let mut state = self.state.lock().unwrap();
        let detail = format!(
            "{}: [{}] purchase={}",
            policy.agent_group,
            policy
                .allowed_fields
                .iter()
                .map(|f| f.as_str())
                .collect::<Vec<_>>()
                .join(","),
            policy.may_purchase
        );
        state.audit(now, AuditKind::ScopeChanged, None, detail);
        state.scopes.insert(policy.agent_group.clone(), policy.clone());
        Ok(policy)
    }

    pub fn scopes(&self) -> Vec<ScopePolicy> {
        self.state.lock().unwrap().scopes.values().cloned().collect()
    }

    /// Terminates every session with `expires_at <= now` and evicts cached
    /// keys past their absolute expiration.
    pub fn expire_sessions(&self, now: DateTime<Utc>) -> usize {
        let mut state = self.state.lock().unwrap();
        let expired: Vec<AgentSession> = state
            .sessions
            .values()
            .filter(|s| s.is_expired(now))
            .cloned()
            .collect();
        for s in &expired {
            state.sessions.remove(&s.session_token);
            state.audit(now, AuditKind::SessionExpired, Some(&s.agent), format!("session {}", s.session_id));
        }
        drop(state);
        self.key_slots.lock().unwrap().retain(|_, slot| match slot.try_lock() {
            Ok(guard) => guard.as_ref().is_none_or(|k| now < k.absolute_expiration),
            Err(_) => true,
        });
        expired.len()
    }

    pub async fn create_delegation(
        &self,
        cred: &HumanCredential,
        trust: TrustLevel,
    ) -> Result<DelegationRecord, WebsiteError> {
        self.authenticate_human(cred)?;
        let client = self
            .delegator
            .as_ref()
            .ok_or_else(|| WebsiteError::Invalid("delegation proxy is not configured".into()))?;
        let created = client
            .create_delegation(trust, GroupName::websites(), format!("{trust}-trust agent access"))
            .await
            .map_err(|e| match e {
                delegate_auth::AuthClientError::Rejected { message, .. } => WebsiteError::Denied(message),
                other => WebsiteError::Upstream(other.to_string()),
            })?;
        let now = self.clock.now();
        let record = DelegationRecord {
            session_key_id: created.session_key_id,
            trust,
            created_at: now,
            relative_validity: created.relative_validity,
            absolute_expiration: created.absolute_expiration,
        };
        let mut state = self.state.lock().unwrap();
        state.audit(now, AuditKind::DelegationCreated, None, format!("key {} for {trust} trust", record.session_key_id));
        state.delegations.push(record.clone());
        Ok(record)
    }

    pub fn sessions(&self) -> Vec<SessionView> {
        let mut v: Vec<_> = self.state.lock().unwrap().sessions.values().map(AgentSession::view).collect();
        v.sort_by_key(|s| s.session_id);
        v
    }

    pub fn purchases(&self) -> Vec<PurchaseRecord> {
        self.state.lock().unwrap().purchases.clone()
    }

    pub fn audit_log(&self) -> Vec<AuditEvent> {
        self.state.lock().unwrap().audit.clone()
    }

    pub fn delegations(&self) -> Vec<DelegationRecord> {
        self.state.lock().unwrap().delegations.clone()
    }

    pub fn stats(&self) -> WebsiteStats {
        let redemptions = self.redemptions.lock().unwrap().clone();
        WebsiteStats {
            agent_requests: self.agent_requests.load(Ordering::Relaxed),
            auth_redemptions: redemptions.values().sum(),
            redemptions_by_key: redemptions,
            active_sessions: self.state.lock().unwrap().sessions.len(),
        }
    }
}
