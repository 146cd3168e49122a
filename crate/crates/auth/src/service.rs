//! The Auth tables and every state transition on them.
//!
//! All mutations run under one write lock, so the check-then-register step
//! of a redemption is atomic with respect to other redemptions.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::path::Path;
use std::sync::RwLock;

use chrono::{DateTime, Duration, Utc};
use delegate_core::{
    compute_hmac, constant_time_equal, generate_session_key, CryptoSpec, EntityName, GroupName,
    KeyMaterial, SharedClock, SharedRandom, TrustLevel, ValidityWindow,
};
use serde::{Deserialize, Serialize};

use crate::events::{AuthEvent, EventLog, LogError, LogRecord};
use crate::model::{
    CachedSessionKey, CommunicationPolicy, DelegationCreated, Owner, PolicyId, PolicyTarget,
    RegisteredEntity, SessionKeyId, SessionKeyResponse,
};
use crate::wire::{AuthOperation, SignedRequest, REQUEST_NONCE_LEN};
use crate::AuthError;

#[derive(Debug, Clone)]
pub struct AuthConfig {
    /// Accepted distance between a request timestamp and Auth's clock.
    pub clock_skew: Duration,
    /// How long request nonces are remembered for replay detection.
    pub replay_retention: Duration,
    pub distribution_key_lifetime: Duration,
}

impl Default for AuthConfig {
    fn default() -> Self {
        Self {
            clock_skew: Duration::seconds(120),
            replay_retention: Duration::minutes(10),
            distribution_key_lifetime: Duration::days(365),
        }
    }
}

/// Message channel a signed request arrived on, derived from the sender's group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    AgentAuth,
    WebsiteAuth,
    UserAuth,
}

impl Channel {
    fn of(group: &GroupName) -> Self {
        if TrustLevel::from_group(group).is_some() {
            Channel::AgentAuth
        } else if group.as_str() == GroupName::WEBSITES {
            Channel::WebsiteAuth
        } else {
            Channel::UserAuth
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthStats {
    pub entities: usize,
    pub policies: usize,
    pub live_keys: usize,
    pub signed_requests: BTreeMap<Channel, u64>,
}

#[derive(Debug, Default)]
struct Tables {
    entities: BTreeMap<EntityName, RegisteredEntity>,
    policies: BTreeMap<PolicyId, CommunicationPolicy>,
    keys: BTreeMap<SessionKeyId, CachedSessionKey>,
    next_policy_id: PolicyId,
    next_key_id: SessionKeyId,
}

impl Tables {
    fn new() -> Self {
        Self {
            next_policy_id: 1,
            next_key_id: 1,
            ..Default::default()
        }
    }

    fn apply(&mut self, event: &AuthEvent) {
        match event {
            AuthEvent::EntityRegistered { entity } => {
                self.entities.insert(entity.name.clone(), entity.clone());
            }
            AuthEvent::PolicyAdded { id, policy } => {
                self.policies.insert(*id, policy.clone());
                self.next_policy_id = self.next_policy_id.max(id + 1);
            }
            AuthEvent::PolicyRemoved { id } => {
                self.policies.remove(id);
            }
            AuthEvent::KeyCreated { key } => {
                self.next_key_id = self.next_key_id.max(key.id + 1);
                self.keys.insert(key.id, key.clone());
            }
            AuthEvent::OwnerRegistered { id, owner } => {
                if let Some(key) = self.keys.get_mut(id) {
                    key.owners.push(owner.clone());
                }
            }
            AuthEvent::KeyPurged { id } => {
                self.keys.remove(id);
            }
        }
    }
}

#[derive(Debug, Default)]
struct ReplayCache {
    order: VecDeque<(DateTime<Utc>, EntityName, Vec<u8>)>,
    seen: HashSet<(EntityName, Vec<u8>)>,
}

impl ReplayCache {
    fn prune(&mut self, cutoff: DateTime<Utc>) {
        while let Some((at, _, _)) = self.order.front() {
            if *at >= cutoff {
                break;
            }
            let (_, sender, nonce) = self.order.pop_front().unwrap();
            self.seen.remove(&(sender, nonce));
        }
    }

    /// False if the pair was already present.
    fn insert(&mut self, now: DateTime<Utc>, sender: &EntityName, nonce: &[u8]) -> bool {
        if !self.seen.insert((sender.clone(), nonce.to_vec())) {
            return false;
        }
        self.order.push_back((now, sender.clone(), nonce.to_vec()));
        true
    }
}

#[derive(Debug)]
struct Inner {
    tables: Tables,
    log: EventLog,
    replay: ReplayCache,
    counters: BTreeMap<Channel, u64>,
}

impl Inner {
    fn commit(&mut self, now: DateTime<Utc>, event: AuthEvent) -> Result<(), AuthError> {
        let record = LogRecord { at: now, event };
        self.log
            .append(&record)
            .map_err(|e| AuthError::Internal(e.to_string()))?;
        self.tables.apply(&record.event);
        Ok(())
    }
}

pub struct AuthService {
    inner: RwLock<Inner>,
    clock: SharedClock,
    rng: SharedRandom,
    config: AuthConfig,
}

impl AuthService {
    /// A service with no persistence.
    pub fn in_memory(clock: SharedClock, rng: SharedRandom, config: AuthConfig) -> Self {
        Self::with_log(EventLog::in_memory(), Vec::new(), clock, rng, config)
    }

    /// Opens the event log at `path`, replaying it into the tables.
    pub fn open(
        path: impl AsRef<Path>,
        clock: SharedClock,
        rng: SharedRandom,
        config: AuthConfig,
    ) -> Result<Self, LogError> {
        let (log, records) = EventLog::open(path)?;
        Ok(Self::with_log(log, records, clock, rng, config))
    }

    fn with_log(
        log: EventLog,
        records: Vec<LogRecord>,
        clock: SharedClock,
        rng: SharedRandom,
        config: AuthConfig,
    ) -> Self {
        let mut tables = Tables::new();
        for rec in &records {
            tables.apply(&rec.event);
        }
        Self {
            inner: RwLock::new(Inner {
                tables,
                log,
                replay: ReplayCache::default(),
                counters: BTreeMap::new(),
            }),
            clock,
            rng,
            config,
        }
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    /// Registers a principal. With a caller-supplied key, re-registering the
    /// identical (name, group, key) is accepted and reported as not created.
    pub fn register_entity(
        &self,
        name: EntityName,
        group: GroupName,
        spec: CryptoSpec,
        supplied_key: Option<KeyMaterial>,
    ) -> Result<(RegisteredEntity, bool), AuthError> {
        spec.validate()?;
        if let Some(k) = &supplied_key {
            k.check_spec(&spec)?;
        }
        let now = self.clock.now();
        let mut inner = self.inner.write().unwrap();
        if let Some(existing) = inner.tables.entities.get(&name) {
            let same = supplied_key.as_ref() == Some(&existing.distribution_key)
                && existing.group == group;
            return if same {
                Ok((existing.clone(), false))
            } else {
                Err(AuthError::Conflict(format!("entity {name} is already registered")))
            };
        }
        let distribution_key = match supplied_key {
            Some(k) => k,
            None => generate_session_key(&spec, self.rng.as_ref())?,
        };
        let lifetime = self.config.distribution_key_lifetime;
        let dist_key_validity = ValidityWindow::new(
            lifetime.to_std().map_err(|e| AuthError::Invalid(e.to_string()))?,
            now + lifetime,
            now,
        )?;
        let entity = RegisteredEntity {
            name,
            group,
            distribution_key,
            dist_key_spec: spec,
            dist_key_validity,
        };
        inner.commit(
            now,
            AuthEvent::EntityRegistered {
                entity: entity.clone(),
            },
        )?;
        tracing::info!(entity = %entity.name, group = %entity.group, "entity registered");
        Ok((entity, true))
    }

    /// Stores a policy. An identical policy already present is returned
    /// instead of duplicated; a different policy for the same route conflicts.
    pub fn add_policy(&self, policy: CommunicationPolicy) -> Result<(PolicyId, bool), AuthError> {
        policy.validate()?;
        let now = self.clock.now();
        let mut inner = self.inner.write().unwrap();
        for (id, existing) in &inner.tables.policies {
            if existing == &policy {
                return Ok((*id, false));
            }
            if existing.same_route(&policy) {
                return Err(AuthError::Conflict(format!(
                    "policy {id} already governs this route"
                )));
            }
        }
        let id = inner.tables.next_policy_id;
        inner.commit(now, AuthEvent::PolicyAdded { id, policy })?;
        Ok((id, true))
    }

    pub fn remove_policy(&self, id: PolicyId) -> Result<(), AuthError> {
        let now = self.clock.now();
        let mut inner = self.inner.write().unwrap();
        if !inner.tables.policies.contains_key(&id) {
            return Err(AuthError::NotFound(format!("policy {id}")));
        }
        inner.commit(now, AuthEvent::PolicyRemoved { id })
    }

    pub fn policies(&self) -> Vec<(PolicyId, CommunicationPolicy)> {
        let inner = self.inner.read().unwrap();
        inner
            .tables
            .policies
            .iter()
            .map(|(id, p)| (*id, p.clone()))
            .collect()
    }

    pub fn entity(&self, name: &EntityName) -> Option<RegisteredEntity> {
        self.inner.read().unwrap().tables.entities.get(name).cloned()
    }

    /// Snapshot of a cached key row, for inspection and tests.
    pub fn session_key(&self, id: SessionKeyId) -> Option<CachedSessionKey> {
        self.inner.read().unwrap().tables.keys.get(&id).cloned()
    }

    pub fn session_keys(&self) -> Vec<CachedSessionKey> {
        self.inner.read().unwrap().tables.keys.values().cloned().collect()
    }

    pub fn stats(&self) -> AuthStats {
        let inner = self.inner.read().unwrap();
        AuthStats {
            entities: inner.tables.entities.len(),
            policies: inner.tables.policies.len(),
            live_keys: inner.tables.keys.len(),
            signed_requests: inner.counters.clone(),
        }
    }

    pub fn verify_signed_request(&self, req: &SignedRequest) -> Result<RegisteredEntity, AuthError> {
        let now = self.clock.now();
        let mut inner = self.inner.write().unwrap();
        self.verify_locked(&mut inner, req, now)
    }

    fn verify_locked(
        &self,
        inner: &mut Inner,
        req: &SignedRequest,
        now: DateTime<Utc>,
    ) -> Result<RegisteredEntity, AuthError> {
        let entity = inner
            .tables
            .entities
            .get(&req.sender)
            .cloned()
            .ok_or_else(|| AuthError::Authentication(format!("unknown sender {}", req.sender)))?;
        *inner.counters.entry(Channel::of(&entity.group)).or_default() += 1;

        let sent_at = req.parsed_timestamp()?;
        if (now - sent_at).abs() > self.config.clock_skew {
            return Err(AuthError::Authentication("request timestamp outside the accepted window".into()));
        }
        if req.request_nonce.len() != REQUEST_NONCE_LEN {
            return Err(AuthError::Authentication("request nonce must be 16 octets".into()));
        }
        if entity.dist_key_validity.is_expired(now) {
            return Err(AuthError::Authentication("distribution key has expired".into()));
        }
        let expected = compute_hmac(&entity.dist_key_spec, &entity.distribution_key, &req.mac_input())?;
        if !constant_time_equal(expected.as_bytes(), req.signature.as_bytes()) {
            return Err(AuthError::Authentication("bad request signature".into()));
        }
        inner.replay.prune(now - self.config.replay_retention);
        if !inner.replay.insert(now, &req.sender, &req.request_nonce) {
            return Err(AuthError::Replay);
        }
        Ok(entity)
    }

    /// Creates a delegated session key on behalf of the signing user and
    /// returns its id. The key material stays inside Auth.
    pub fn create_delegated_session_key(&self, req: &SignedRequest) -> Result<DelegationCreated, AuthError> {
        let now = self.clock.now();
        let mut inner = self.inner.write().unwrap();
        let sender = self.verify_locked(&mut inner, req, now)?;
        let AuthOperation::CreateDelegation {
            trust,
            target_group,
            purpose,
        } = req.operation()?
        else {
            return Err(AuthError::Invalid("expected a create_delegation body".into()));
        };
        let delegatee = trust.group();
        let policy = inner
            .tables
            .policies
            .values()
            .find(|p| {
                p.requesting_group == sender.group
                    && matches!(&p.target, PolicyTarget::Delegation(d)
                        if d.delegatee_group == delegatee && d.target_group == target_group)
            })
            .cloned()
            .ok_or_else(|| {
                AuthError::Denied(format!(
                    "no delegation policy lets {} delegate {} access to {}",
                    sender.group, delegatee, target_group
                ))
            })?;

        let key = generate_session_key(&policy.crypto, self.rng.as_ref())?;
        let absolute = Duration::from_std(policy.absolute_validity)
            .map_err(|e| AuthError::Invalid(e.to_string()))?;
        let row = CachedSessionKey {
            id: inner.tables.next_key_id,
            key,
            crypto: policy.crypto,
            owners: Vec::new(),
            expected_owner_groups: vec![delegatee, target_group],
            purpose,
            delegator: sender.name.clone(),
            relative_validity: policy.relative_validity,
            absolute_expiration: now + absolute,
        };
        let created = DelegationCreated {
            session_key_id: row.id,
            expected_owner_groups: row.expected_owner_groups.clone(),
            relative_validity: row.relative_validity,
            absolute_expiration: row.absolute_expiration,
        };
        inner.commit(now, AuthEvent::KeyCreated { key: row })?;
        tracing::info!(id = created.session_key_id, delegator = %sender.name, %trust, "delegated session key created");
        Ok(created)
    }

    /// Redeems a session key. Each expected owner group gets the key at most
    /// once, in the order the groups are listed.
    pub fn request_session_key(&self, req: &SignedRequest) -> Result<SessionKeyResponse, AuthError> {
        let now = self.clock.now();
        let mut inner = self.inner.write().unwrap();
        let sender = self.verify_locked(&mut inner, req, now)?;
        let AuthOperation::RequestSessionKey { id } = req.operation()? else {
            return Err(AuthError::Invalid("expected a request_session_key body".into()));
        };
        let key = inner.tables.keys.get(&id).cloned().ok_or(AuthError::UnknownKey(id))?;
        if key.is_expired(now) {
            inner.commit(now, AuthEvent::KeyPurged { id })?;
            return Err(AuthError::Expired(id));
        }
        let Some(position) = key.expected_owner_groups.iter().position(|g| g == &sender.group) else {
            return Err(AuthError::Denied(format!(
                "group {} is not an expected owner of key {id}",
                sender.group
            )));
        };
        if key.owner_of(&sender.group).is_some() {
            return Err(AuthError::DuplicateIssuance(id));
        }
        if let Some(missing) = key.expected_owner_groups[..position]
            .iter()
            .find(|g| key.owner_of(g).is_none())
        {
            return Err(AuthError::Denied(format!(
                "key {id} has not yet been redeemed by group {missing}"
            )));
        }
        let owner = Owner {
            entity: sender.name.clone(),
            group: sender.group.clone(),
        };
        inner.commit(now, AuthEvent::OwnerRegistered { id, owner })?;
        tracing::info!(id, entity = %sender.name, "session key issued");
        Ok(SessionKeyResponse {
            id,
            key: key.key,
            crypto: key.crypto,
            expected_owner_groups: key.expected_owner_groups,
            prior_owners: key.owners,
            relative_validity: key.relative_validity,
            absolute_expiration: key.absolute_expiration,
        })
    }

    /// Removes every key whose absolute expiration is at or before `now`.
    pub fn purge_expired_keys(&self, now: DateTime<Utc>) -> Result<usize, AuthError> {
        let mut inner = self.inner.write().unwrap();
        let expired: Vec<_> = inner
            .tables
            .keys
            .values()
            .filter(|k| k.absolute_expiration <= now)
            .map(|k| k.id)
            .collect();
        for id in &expired {
            inner.commit(now, AuthEvent::KeyPurged { id: *id })?;
        }
        Ok(expired.len())
    }
}
