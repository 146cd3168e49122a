//! HTTP client for the Auth API, used by agents, websites and provisioning.

use std::sync::atomic::{AtomicU64, Ordering};

use delegate_core::{
    CryptoSpec, EntityName, GroupName, KeyMaterial, SharedClock, SharedRandom, TrustLevel,
};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;

use crate::model::{CommunicationPolicy, DelegationCreated, PolicyId, SessionKeyId, SessionKeyResponse};
use crate::service::AuthStats;
use crate::wire::{
    AuthOperation, PolicyCreated, PolicyEntry, RegisterEntityRequest, RegisteredEntityView,
    SignedRequest,
};
use crate::{AuthError, ErrorBody, ErrorCode};

#[derive(Debug, thiserror::Error)]
pub enum AuthClientError {
    #[error("cannot reach Auth at {url}: {message}")]
    Transport { url: String, message: String },
    #[error("Auth rejected the request ({status}, {code:?}): {message}")]
    Rejected {
        status: u16,
        code: ErrorCode,
        message: String,
    },
    #[error("unexpected Auth response: {0}")]
    Decode(String),
    #[error("client has no signing identity")]
    NoIdentity,
    #[error("could not sign request: {0}")]
    Signing(#[from] AuthError),
}

impl AuthClientError {
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            AuthClientError::Rejected { code, .. } => Some(*code),
            _ => None,
        }
    }
}

/// Name, distribution key and crypto spec used to sign requests.
#[derive(Debug, Clone)]
pub struct Identity {
    pub name: EntityName,
    pub key: KeyMaterial,
    pub spec: CryptoSpec,
}

pub struct AuthClient {
    http: reqwest::Client,
    base: String,
    identity: Option<Identity>,
    admin_token: Option<String>,
    clock: SharedClock,
    rng: SharedRandom,
    signed_sent: AtomicU64,
}

impl AuthClient {
    pub fn new(base_url: impl Into<String>, clock: SharedClock, rng: SharedRandom) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base_url.into().trim_end_matches('/').to_owned(),
            identity: None,
            admin_token: None,
            clock,
            rng,
            signed_sent: AtomicU64::new(0),
        }
    }

    pub fn with_identity(mut self, identity: Identity) -> Self {
        self.identity = Some(identity);
        self
    }

    pub fn with_admin_token(mut self, token: impl Into<String>) -> Self {
        self.admin_token = Some(token.into());
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    /// Number of signed requests this client has sent.
    pub fn signed_requests_sent(&self) -> u64 {
        self.signed_sent.load(Ordering::Relaxed)
    }

    fn sign(&self, op: &AuthOperation) -> Result<SignedRequest, AuthClientError> {
        let id = self.identity.as_ref().ok_or(AuthClientError::NoIdentity)?;
        Ok(SignedRequest::sign(
            &id.name,
            &id.key,
            &id.spec,
            self.clock.now(),
            self.rng.as_ref(),
            op,
        )?)
    }

    pub async fn create_delegation(
        &self,
        trust: TrustLevel,
        target_group: GroupName,
        purpose: impl Into<String>,
    ) -> Result<DelegationCreated, AuthClientError> {
        let req = self.sign(&AuthOperation::CreateDelegation {
            trust,
            target_group,
            purpose: purpose.into(),
        })?;
        self.signed_sent.fetch_add(1, Ordering::Relaxed);
        self.send(self.http.post(self.url("/delegations")).json(&req)).await
    }

    pub async fn request_session_key(&self, id: SessionKeyId) -> Result<SessionKeyResponse, AuthClientError> {
        let req = self.sign(&AuthOperation::RequestSessionKey { id })?;
        self.signed_sent.fetch_add(1, Ordering::Relaxed);
        self.send(
            self.http
                .post(self.url(&format!("/session-keys/{id}/request")))
                .json(&req),
        )
        .await
    }

    /// Sends an already-signed envelope verbatim.
    pub async fn send_signed_raw(
        &self,
        path: &str,
        req: &SignedRequest,
    ) -> Result<serde_json::Value, AuthClientError> {
        self.send(self.http.post(self.url(path)).json(req)).await
    }

    pub async fn register_entity(
        &self,
        req: &RegisterEntityRequest,
    ) -> Result<RegisteredEntityView, AuthClientError> {
        self.send(self.admin(self.http.post(self.url("/entities"))).json(req))
            .await
    }

    pub async fn add_policy(&self, policy: &CommunicationPolicy) -> Result<PolicyId, AuthClientError> {
        let created: PolicyCreated = self
            .send(self.admin(self.http.post(self.url("/policies"))).json(policy))
            .await?;
        Ok(created.id)
    }

    pub async fn list_policies(&self) -> Result<Vec<PolicyEntry>, AuthClientError> {
        self.send(self.admin(self.http.get(self.url("/policies")))).await
    }

    pub async fn remove_policy(&self, id: PolicyId) -> Result<(), AuthClientError> {
        let resp = self
            .admin(self.http.delete(self.url(&format!("/policies/{id}"))))
            .send()
            .await
            .map_err(|e| self.transport(e))?;
        if resp.status() == StatusCode::NO_CONTENT {
            Ok(())
        } else {
            Err(Self::rejection(resp).await)
        }
    }

    pub async fn stats(&self) -> Result<AuthStats, AuthClientError> {
        self.send(self.admin(self.http.get(self.url("/stats")))).await
    }

    pub async fn health(&self) -> Result<(), AuthClientError> {
        let resp = self
            .http
            .get(self.url("/healthz"))
            .send()
            .await
            .map_err(|e| self.transport(e))?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(Self::rejection(resp).await)
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn admin(&self, rb: reqwest::RequestBuilder) -> reqwest::RequestBuilder {
        match &self.admin_token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    fn transport(&self, e: reqwest::Error) -> AuthClientError {
        AuthClientError::Transport {
            url: self.base.clone(),
            message: e.to_string(),
        }
    }

    async fn send<T: DeserializeOwned>(&self, rb: reqwest::RequestBuilder) -> Result<T, AuthClientError> {
        let resp = rb.send().await.map_err(|e| self.transport(e))?;
        if !resp.status().is_success() {
            return Err(Self::rejection(resp).await);
        }
        resp.json()
            .await
            .map_err(|e| AuthClientError::Decode(e.to_string()))
    }

    async fn rejection(resp: reqwest::Response) -> AuthClientError {
        let status = resp.status().as_u16();
        match resp.json::<ErrorBody>().await {
            Ok(body) => AuthClientError::Rejected {
                status,
                code: body.error,
                message: body.message,
            },
            Err(e) => AuthClientError::Decode(format!("status {status} without error body: {e}")),
        }
    }
}
