//! Auth database rows: registered entities, communication policies and
//! cached session keys.

use std::time::Duration;

use chrono::{DateTime, Utc};
use delegate_core::serde_util::duration_secs;
use delegate_core::{CryptoSpec, EntityName, GroupName, KeyMaterial, ValidityWindow};
use serde::{Deserialize, Serialize};

use crate::AuthError;

pub type PolicyId = u64;
pub type SessionKeyId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisteredEntity {
    pub name: EntityName,
    pub group: GroupName,
    pub distribution_key: KeyMaterial,
    pub dist_key_spec: CryptoSpec,
    pub dist_key_validity: ValidityWindow,
}

/// The agent group granted delegated access and the group it may access.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DelegationTarget {
    pub delegatee_group: GroupName,
    pub target_group: GroupName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target_type", content = "target")]
pub enum PolicyTarget {
    Group(GroupName),
    Delegation(DelegationTarget),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationPolicy {
    pub requesting_group: GroupName,
    #[serde(flatten)]
    pub target: PolicyTarget,
    #[serde(default)]
    pub crypto: CryptoSpec,
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative_validity: Duration,
    #[serde(rename = "absolute_validity_secs", with = "duration_secs")]
    pub absolute_validity: Duration,
}

impl CommunicationPolicy {
    pub fn delegation(
        requesting_group: GroupName,
        delegatee_group: GroupName,
        target_group: GroupName,
        relative_validity: Duration,
        absolute_validity: Duration,
    ) -> Self {
        Self {
            requesting_group,
            target: PolicyTarget::Delegation(DelegationTarget {
                delegatee_group,
                target_group,
            }),
            crypto: CryptoSpec::default(),
            relative_validity,
            absolute_validity,
        }
    }

    pub fn validate(&self) -> Result<(), AuthError> {
        self.crypto
            .validate()
            .map_err(|e| AuthError::Invalid(e.to_string()))?;
        if self.relative_validity.is_zero() || self.absolute_validity.is_zero() {
            return Err(AuthError::Invalid("policy validities must be positive".into()));
        }
        if let PolicyTarget::Delegation(d) = &self.target {
            if d.delegatee_group == d.target_group {
                return Err(AuthError::Invalid(
                    "delegatee group and target group must differ".into(),
                ));
            }
        }
        Ok(())
    }

    /// Policies that would answer the same lookup.
    pub(crate) fn same_route(&self, other: &CommunicationPolicy) -> bool {
        self.requesting_group == other.requesting_group && self.target == other.target
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Owner {
    pub entity: EntityName,
    pub group: GroupName,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedSessionKey {
    pub id: SessionKeyId,
    pub key: KeyMaterial,
    pub crypto: CryptoSpec,
    pub owners: Vec<Owner>,
    pub expected_owner_groups: Vec<GroupName>,
    pub purpose: String,
    pub delegator: EntityName,
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative_validity: Duration,
    pub absolute_expiration: DateTime<Utc>,
}

impl CachedSessionKey {
    pub fn is_expired(&self, now: DateTime<Utc>) -> bool {
        now >= self.absolute_expiration
    }

    pub fn owner_of(&self, group: &GroupName) -> Option<&Owner> {
        self.owners.iter().find(|o| &o.group == group)
    }

    /// Checks the owner invariants: every owner belongs to an expected group
    /// and no group holds more than one owner.
    pub fn owners_sound(&self) -> bool {
        self.owners.len() <= self.expected_owner_groups.len()
            && self
                .owners
                .iter()
                .all(|o| self.expected_owner_groups.contains(&o.group))
            && self
                .expected_owner_groups
                .iter()
                .all(|g| self.owners.iter().filter(|o| &o.group == g).count() <= 1)
    }
}

/// What a successful redemption hands back. Only this response ever carries
/// key bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionKeyResponse {
    pub id: SessionKeyId,
    pub key: KeyMaterial,
    pub crypto: CryptoSpec,
    pub expected_owner_groups: Vec<GroupName>,
    pub prior_owners: Vec<Owner>,
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative_validity: Duration,
    pub absolute_expiration: DateTime<Utc>,
}

/// Returned to the delegating user. Carries the key id, never the key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationCreated {
    pub session_key_id: SessionKeyId,
    pub expected_owner_groups: Vec<GroupName>,
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative_validity: Duration,
    pub absolute_expiration: DateTime<Utc>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GroupName {
        GroupName::new(s).unwrap()
    }

    #[test]
    fn policy_wire_shape_carries_target_type() {
        let p = CommunicationPolicy::delegation(
            g("Users"),
            g("HighTrustAgents"),
            g("Websites"),
            Duration::from_secs(60),
            Duration::from_secs(600),
        );
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["target_type"], "Delegation");
        assert_eq!(v["target"]["delegatee_group"], "HighTrustAgents");
        assert_eq!(v["relative_validity_secs"], 60);
        let back: CommunicationPolicy = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn mismatched_target_variant_fails_to_parse() {
        let v = serde_json::json!({
            "requesting_group": "Users",
            "target_type": "Delegation",
            "target": "Websites",
            "relative_validity_secs": 1,
            "absolute_validity_secs": 1
        });
        assert!(serde_json::from_value::<CommunicationPolicy>(v).is_err());
    }

    #[test]
    fn delegation_to_own_group_is_invalid() {
        let p = CommunicationPolicy::delegation(
            g("Users"),
            g("Websites"),
            g("Websites"),
            Duration::from_secs(60),
            Duration::from_secs(600),
        );
        assert!(matches!(p.validate(), Err(AuthError::Invalid(_))));
    }
}
