//! The evaluation fixture: one user, one website, three agents, one
//! delegation policy per trust level and the default scope map.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use delegate_auth::wire::RegisterEntityRequest;
use delegate_auth::{AuthClient, AuthClientError, CommunicationPolicy, PolicyId};
use delegate_core::serde_util::duration_secs;
use delegate_core::{
    generate_session_key, CryptoSpec, EntityName, GroupName, KeyMaterial, RandomSource, TrustLevel,
};
use delegate_website::{ScopePolicy, SessionView};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

pub const USER: &str = "userAlice";
pub const WEBSITE: &str = "myWebsite";

/// The agent registered in `trust`'s group.
pub fn agent_name(trust: TrustLevel) -> &'static str {
    match trust {
        TrustLevel::High => "Business",
        TrustLevel::Medium => "Personal",
        TrustLevel::Low => "Casual",
    }
}

/// Every fixture entity with its group.
pub fn fixture_entities() -> Vec<(EntityName, GroupName)> {
    let mut v = vec![
        (EntityName::new(USER).expect("valid"), GroupName::users()),
        (EntityName::new(WEBSITE).expect("valid"), GroupName::websites()),
    ];
    for trust in TrustLevel::ALL {
        v.push((EntityName::new(agent_name(trust)).expect("valid"), trust.group()));
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrustValidity {
    #[serde(rename = "relative_validity_secs", with = "duration_secs")]
    pub relative: Duration,
    #[serde(rename = "absolute_validity_secs", with = "duration_secs")]
    pub absolute: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub validity: BTreeMap<TrustLevel, TrustValidity>,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        let v = |rel, abs| TrustValidity {
            relative: Duration::from_secs(rel),
            absolute: Duration::from_secs(abs),
        };
        Self {
            validity: BTreeMap::from([
                (TrustLevel::High, v(3600, 86_400)),
                (TrustLevel::Medium, v(1800, 43_200)),
                (TrustLevel::Low, v(600, 7200)),
            ]),
        }
    }
}

impl FixtureSpec {
    pub fn with_validity(mut self, trust: TrustLevel, relative: Duration, absolute: Duration) -> Self {
        self.validity.insert(trust, TrustValidity { relative, absolute });
        self
    }

    pub fn policies(&self) -> Vec<(TrustLevel, CommunicationPolicy)> {
        self.validity
            .iter()
            .map(|(trust, v)| {
                (
                    *trust,
                    CommunicationPolicy::delegation(
                        GroupName::users(),
                        trust.group(),
                        GroupName::websites(),
                        v.relative,
                        v.absolute,
                    ),
                )
            })
            .collect()
    }
}

/// Distribution keys of the fixture entities.
#[derive(Clone, Default)]
pub struct FixtureKeys {
    keys: BTreeMap<String, KeyMaterial>,
}

impl FixtureKeys {
    pub fn generate(rng: &dyn RandomSource) -> Result<Self, HarnessError> {
        let mut keys = BTreeMap::new();
        for (name, _) in fixture_entities() {
            let key = generate_session_key(&CryptoSpec::default(), rng)
                .map_err(|e| HarnessError::Infrastructure(e.to_string()))?;
            keys.insert(name.to_string(), key);
        }
        Ok(Self { keys })
    }

    /// Reads `<name>.key` hex files from `dir`, creating missing ones.
    pub fn load_or_create(dir: &Path, rng: &dyn RandomSource) -> Result<Self, HarnessError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| HarnessError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut keys = BTreeMap::new();
        for (name, _) in fixture_entities() {
            let path = dir.join(format!("{name}.key"));
            let key = if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(io(&path))?;
                KeyMaterial::from_hex(text.trim())
                    .map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?
            } else {
                let key = generate_session_key(&CryptoSpec::default(), rng)
                    .map_err(|e| HarnessError::Infrastructure(e.to_string()))?;
                write_secret(&path, &key.to_hex()).map_err(io(&path))?;
                key
            };
            keys.insert(name.to_string(), key);
        }
        Ok(Self { keys })
    }

    pub fn get(&self, name: &str) -> &KeyMaterial {
        &self.keys[name]
    }
}

fn write_secret(path: &Path, contents: &str) -> std::io::Result<()> {
    use std::io::Write;
    let mut options = std::fs::OpenOptions::new();
    options.write(true).create_new(true);
    #[cfg(unix)]
    std::os::unix::fs::OpenOptionsExt::mode(&mut options, 0o600);
    let mut file = options.open(path)?;
    file.write_all(contents.as_bytes())?;
    file.write_all(b"\n")
}

/// Human-facing website calls used for provisioning and inspection.
pub struct WebsiteAdmin {
    http: reqwest::Client,
    base: String,
    username: String,
    password: String,
}

impl WebsiteAdmin {
    pub fn new(base: impl Into<String>, username: impl Into<String>, password: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_owned(),
            username: username.into(),
            password: password.into(),
        }
    }

    fn failure(&self, path: &str, message: impl std::fmt::Display) -> HarnessError {
        HarnessError::Provision {
            endpoint: format!("{}{path}", self.base),
            message: message.to_string(),
        }
    }

    pub async fn put_scope(&self, policy: &ScopePolicy) -> Result<(), HarnessError> {
        let path = format!("/api/scopes/{}", policy.agent_group);
        let body = delegate_website::ScopeUpdate {
            allowed_fields: policy.allowed_fields.iter().copied().collect(),
            may_purchase: policy.may_purchase,
        };
        let resp = self
            .http
            .put(format!("{}{path}", self.base))
            .basic_auth(&self.username, Some(&self.password))
            .json(&body)
            .send()
            .await
            .map_err(|e| self.failure(&path, e))?;
        if resp.status() != reqwest::StatusCode::NO_CONTENT {
            return Err(self.failure(&path, format!("status {}", resp.status())));
        }
        Ok(())
    }

    async fn get<T: serde::de::DeserializeOwned>(&self, path: &str) -> Result<T, HarnessError> {
        let resp = self
            .http
            .get(format!("{}{path}", self.base))
            .basic_auth(&self.username, Some(&self.password))
            .send()
            .await
            .map_err(|e| self.failure(path, e))?;
        if !resp.status().is_success() {
            return Err(self.failure(path, format!("status {}", resp.status())));
        }
        resp.json().await.map_err(|e| self.failure(path, e))
    }

    pub async fn scopes(&self) -> Result<Vec<ScopePolicy>, HarnessError> {
        self.get("/api/scopes").await
    }

    pub async fn sessions(&self) -> Result<Vec<SessionView>, HarnessError> {
        self.get("/api/sessions").await
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvisionedPolicy {
    pub id: PolicyId,
    pub trust: TrustLevel,
    #[serde(flatten)]
    pub validity: TrustValidity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureDescription {
    pub entities: Vec<(EntityName, GroupName)>,
    pub policies: Vec<ProvisionedPolicy>,
    pub scopes: Vec<ScopePolicy>,
}

fn auth_failure(auth: &AuthClient, path: &str, e: AuthClientError) -> HarnessError {
    HarnessError::Provision {
        endpoint: format!("{}{path}", auth.base_url()),
        message: e.to_string(),
    }
}

/// Registers the fixture in Auth (with an admin-token client) and installs
/// the default scope map on the website. Safe to run repeatedly with the
/// same keys and spec.
pub async fn provision_fixture(
    auth: &AuthClient,
    website: Option<&WebsiteAdmin>,
    spec: &FixtureSpec,
    keys: &FixtureKeys,
) -> Result<FixtureDescription, HarnessError> {
    let entities = fixture_entities();
    for (name, group) in &entities {
        let req = RegisterEntityRequest {
            name: name.clone(),
            group: group.clone(),
            crypto: Some(CryptoSpec::default()),
            distribution_key: Some(keys.get(name.as_str()).clone()),
        };
        auth.register_entity(&req)
            .await
            .map_err(|e| auth_failure(auth, "/entities", e))?;
    }
    let mut policies = Vec::new();
    for (trust, policy) in spec.policies() {
        let id = auth
            .add_policy(&policy)
            .await
            .map_err(|e| auth_failure(auth, "/policies", e))?;
        policies.push(ProvisionedPolicy {
            id,
            trust,
            validity: spec.validity[&trust],
        });
    }
    let scopes = ScopePolicy::default_map();
    if let Some(site) = website {
        for scope in &scopes {
            site.put_scope(scope).await?;
        }
    }
    Ok(FixtureDescription {
        entities,
        policies,
        scopes,
    })
}
