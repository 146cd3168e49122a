use delegate_auth::SessionKeyId;
use delegate_core::{CryptoSpec, EntityName, GroupName, KeyMaterial, TrustLevel};
use delegate_website::ProfileField;
use serde::{Deserialize, Serialize};

use crate::AgentError;

#[derive(Debug, Clone)]
pub struct AgentConfig {
    pub name: EntityName,
    pub group: GroupName,
    pub distribution_key: KeyMaterial,
    pub crypto: CryptoSpec,
    pub auth_url: String,
    pub website_url: String,
}

impl AgentConfig {
    pub fn new(
        name: EntityName,
        group: GroupName,
        distribution_key: KeyMaterial,
        auth_url: impl Into<String>,
        website_url: impl Into<String>,
    ) -> Result<Self, AgentError> {
        let config = Self {
            name,
            group,
            distribution_key,
            crypto: CryptoSpec::default(),
            auth_url: auth_url.into(),
            website_url: website_url.into(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if TrustLevel::from_group(&self.group).is_none() {
            return Err(AgentError::Config(format!(
                "{} is not an agent trust group",
                self.group
            )));
        }
        self.distribution_key
            .check_spec(&self.crypto)
            .map_err(|e| AgentError::Config(e.to_string()))
    }

    pub fn trust(&self) -> TrustLevel {
        TrustLevel::from_group(&self.group).expect("validated trust group")
    }
}

/// What the user asked the agent to do with one delegated key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskScript {
    pub session_key_id: SessionKeyId,
    pub fields_to_fetch: Vec<ProfileField>,
    pub purchase_item: Option<String>,
}

impl TaskScript {
    pub fn new(
        session_key_id: SessionKeyId,
        fields_to_fetch: impl IntoIterator<Item = ProfileField>,
        purchase_item: Option<String>,
    ) -> Result<Self, AgentError> {
        let script = Self {
            session_key_id,
            fields_to_fetch: fields_to_fetch.into_iter().collect(),
            purchase_item,
        };
        script.validate()?;
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.purchase_item.is_some() && self.fields_to_fetch.is_empty() {
            return Err(AgentError::Config(
                "a purchase needs at least one profile field to fetch".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purchase_requires_fields() {
        assert!(TaskScript::new(1, [], Some("USB-C cable".into())).is_err());
        assert!(TaskScript::new(1, [ProfileField::Address], Some("USB-C cable".into())).is_ok());
        assert!(TaskScript::new(1, [], None).is_ok());
    }

    #[test]
    fn config_requires_trust_group() {
        let key = KeyMaterial::from_bytes(vec![1; 32]);
        let name = EntityName::new("Casual").unwrap();
        assert!(AgentConfig::new(name.clone(), GroupName::users(), key.clone(), "a", "b").is_err());
        let cfg = AgentConfig::new(name, TrustLevel::Low.group(), key, "a", "b").unwrap();
        assert_eq!(cfg.trust(), TrustLevel::Low);
    }
}
