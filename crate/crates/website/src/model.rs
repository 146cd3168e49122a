use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use chrono::{DateTime, Utc};
use delegate_auth::{Owner, SessionKeyId};
use delegate_core::serde_util::duration_secs;
use delegate_core::{CryptoSpec, EntityName, GroupName, KeyMaterial, Nonce, TrustLevel};
use serde::{Deserialize, Serialize};

use crate::WebsiteError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileField {
    Email,
    Phone,
    Address,
    Card,
}

impl ProfileField {
    pub const ALL: [ProfileField; 4] = [
        ProfileField::Email,
        ProfileField::Phone,
        ProfileField::Address,
        ProfileField::Card,
    ];

    /// Fields a purchase copies from the profile.
    pub const PURCHASE_FIELDS: [ProfileField; 3] =
        [ProfileField::Address, ProfileField::Card, ProfileField::Phone];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileField::Email => "email",
            ProfileField::Phone => "phone",
            ProfileField::Address => "address",
            ProfileField::Card => "card",
        }
    }
}

impl fmt::Display for ProfileField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileField {
    type Err = WebsiteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| WebsiteError::Invalid(format!("unknown profile field {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: EntityName,
    pub email: String,
    pub phone: String,
    pub address: String,
    /// Stored pre-masked, e.g. `**** **** **** 4242`.
    pub card: String,
}

impl UserProfile {
    pub fn field(&self, field: ProfileField) -> &str {
        match field {
            ProfileField::Email => &self.email,
            ProfileField::Phone => &self.phone,
            ProfileField::Address => &self.address,
            ProfileField::Card => &self.card,
        }
    }

    pub fn demo() -> Self {
        Self {
            user: EntityName::new("userAlice").expect("valid name"),
            email: "alice@example.com".into(),
            phone: "+1-480-555-0134".into(),
            address: "1151 S Forest Ave, Tempe, AZ 85281".into(),
            card: "**** **** **** 4242".into(),
        }
    }
}

/// What agents of one group may read and whether they may purchase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopePolicy {
    pub agent_group: GroupName,
    pub allowed_fields: BTreeSet<ProfileField>,
    pub may_purchase: bool,
}

impl ScopePolicy {
    pub fn new(
        agent_group: GroupName,
        allowed_fields: impl IntoIterator<Item = ProfileField>,
        may_purchase: bool,
    ) -> Result<Self, WebsiteError> {
        let policy = Self {
            agent_group,
            allowed_fields: allowed_fields.into_iter().collect(),
            may_purchase,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), WebsiteError> {
        if self.may_purchase
            && !ProfileField::PURCHASE_FIELDS
                .iter()
                .all(|f| self.allowed_fields.contains(f))
        {
            return Err(WebsiteError::Invalid(
                "purchase scope requires address, card and phone".into(),
            ));
        }
        Ok(())
    }

    pub fn allows(&self, field: ProfileField) -> bool {
        self.allowed_fields.contains(&field)
    }

    /// Low = {email}; Medium = {email, phone}; High = all fields plus purchase.
    pub fn default_for(trust: TrustLevel) -> Self {
        use ProfileField::*;
        let (fields, purchase): (&[ProfileField], bool) = match trust {
            TrustLevel::Low => (&[Email], false),
            TrustLevel::Medium => (&[Email, Phone], false),
            TrustLevel::High => (&[Email, Phone, Address, Card], true),
        };
        Self::new(trust.group(), fields.iter().copied(), purchase).expect("defaults are valid")
    }

    pub fn default_map() -> Vec<Self> {
        TrustLevel::ALL.into_iter().map(Self::default_for).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub challenge_id: String,
    pub nonce: Nonce,
    pub issued_at: DateTime<Utc>,
    pub consumed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeIssued {
    pub challenge_id: String,
    pub nonce: Nonce,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSession {
    pub session_id: u64,
    pub session_token: String,
    pub agent: EntityName,
    pub agent_group: GroupName,
    pub session_key_id: SessionKeyId,
    pub started_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

impl AgentSession {
    /// Invalid at and after `expires_at`.
    pub fn is_expired(&self, now: DateTime<Utc>) -> bool {
        now >= self.expires_at
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            session_id: self.session_id,
            agent: self.agent.clone(),
            agent_group: self.agent_group.clone(),
            session_key_id: self.session_key_id,
            started_at: self.started_at,
            expires_at: self.expires_at,
        }
    }
}

/// Session as shown to the human user; no bearer token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: u64,
    pub agent: EntityName,
    pub agent_group: GroupName,
    pub session_key_id: SessionKeyId,
    pub started_at: DateTime<Utc>,
    pub expires_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionIssued {
    pub session_token: String,
    pub expires_at: DateTime<Utc>,
    pub agent: EntityName,
    pub agent_group: GroupName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PurchaseStatus {
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseRecord {
    pub id: u64,
    pub session_id: u64,
    pub agent: EntityName,
    pub item: String,
    pub shipping_address: String,
    pub card: String,
    pub phone: String,
    pub placed_at: DateTime<Utc>,
    pub status: PurchaseStatus,
}

/// Key fetched from Auth, cached because Auth issues it to the website once.
#[derive(Debug, Clone)]
pub struct CachedWebsiteKey {
    pub session_key_id: SessionKeyId,
    pub key: KeyMaterial,
    pub crypto: CryptoSpec,
    pub agent_owner: Owner,
    pub relative_validity: Duration,
    pub absolute_expiration: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditKind {
    LoginSucceeded,
    LoginFailed,
    FieldRead,
    FieldDenied,
    PurchaseCompleted,
    PurchaseDenied,
    SessionExpired,
    ScopeChanged,
    DelegationCreated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub at: DateTime<Utc>,
    pub kind: AuditKind,
    pub agent: Option<EntityName>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationRecord {
    pub session_key_id: SessionKeyId,
    pub trust: TrustLevel,
    pub created_at: DateTime<Utc>,
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative_validity: Duration,
    pub absolute_expiration: DateTime<Utc>,
}
