//! Signed request envelope for entity-to-Auth traffic.
//!
//! The MAC input is `timestamp ‖ request_nonce ‖ body` where `timestamp` is
//! the RFC 3339 string exactly as transmitted, `request_nonce` is the 16 raw
//! octets and `body` is the raw payload (a JSON-encoded [`AuthOperation`]).

use chrono::{DateTime, SecondsFormat, Utc};
use delegate_core::{compute_hmac, CryptoSpec, EntityName, HmacTag, KeyMaterial, RandomSource, TrustLevel};
use serde::{Deserialize, Serialize};

use crate::model::SessionKeyId;
use crate::AuthError;

pub const REQUEST_NONCE_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AuthOperation {
    CreateDelegation {
        trust: TrustLevel,
        target_group: delegate_core::GroupName,
        #[serde(default)]
        purpose: String,
    },
    RequestSessionKey {
        id: SessionKeyId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedRequest {
    pub sender: EntityName,
    pub timestamp: String,
    #[serde(with = "delegate_core::serde_util::hex_bytes")]
    pub request_nonce: Vec<u8>,
    #[serde(with = "base64_bytes")]
    pub body: Vec<u8>,
    pub signature: HmacTag,
}

impl SignedRequest {
    pub fn sign(
        sender: &EntityName,
        key: &KeyMaterial,
        spec: &CryptoSpec,
        now: DateTime<Utc>,
        rng: &dyn RandomSource,
        operation: &AuthOperation,
    ) -> Result<Self, AuthError> {
        let timestamp = now.to_rfc3339_opts(SecondsFormat::Millis, true);
        let request_nonce = rng.bytes(REQUEST_NONCE_LEN)?;
        let body = serde_json::to_vec(operation).map_err(|e| AuthError::Internal(e.to_string()))?;
        let signature = compute_hmac(spec, key, &mac_input(&timestamp, &request_nonce, &body))?;
        Ok(Self {
            sender: sender.clone(),
            timestamp,
            request_nonce,
            body,
            signature,
        })
    }

    pub fn mac_input(&self) -> Vec<u8> {
        mac_input(&self.timestamp, &self.request_nonce, &self.body)
    }

    pub fn parsed_timestamp(&self) -> Result<DateTime<Utc>, AuthError> {
        DateTime::parse_from_rfc3339(&self.timestamp)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| AuthError::Authentication(format!("malformed timestamp: {e}")))
    }

    pub fn operation(&self) -> Result<AuthOperation, AuthError> {
        serde_json::from_slice(&self.body)
            .map_err(|e| AuthError::Invalid(format!("malformed request body: {e}")))
    }
}

fn mac_input(timestamp: &str, nonce: &[u8], body: &[u8]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(timestamp.len() + nonce.len() + body.len());
    buf.extend_from_slice(timestamp.as_bytes());
    buf.extend_from_slice(nonce);
    buf.extend_from_slice(body);
    buf
}

mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        STANDARD.decode(s).map_err(serde::de::Error::custom)
    }
}

/// Admin registration request. When `distribution_key` is supplied the call
/// is idempotent for an identical (name, group, key) triple.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterEntityRequest {
    pub name: EntityName,
    pub group: delegate_core::GroupName,
    #[serde(default)]
    pub crypto: Option<CryptoSpec>,
    #[serde(default)]
    pub distribution_key: Option<KeyMaterial>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisteredEntityView {
    pub name: EntityName,
    pub group: delegate_core::GroupName,
    pub distribution_key: KeyMaterial,
    pub crypto: CryptoSpec,
    pub absolute_expiration: DateTime<Utc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyCreated {
    pub id: crate::model::PolicyId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyEntry {
    pub id: crate::model::PolicyId,
    #[serde(flatten)]
    pub policy: crate::model::CommunicationPolicy,
}
