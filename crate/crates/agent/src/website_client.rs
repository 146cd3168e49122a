//! Minimal client for the agent-facing website API.

use delegate_auth::SessionKeyId;
use delegate_core::HmacTag;
use delegate_website::{
    ChallengeIssued, FieldValue, LoginRequest, ProfileField, PurchaseRecord, PurchaseRequest,
    SessionIssued, WebsiteErrorBody,
};
use serde::de::DeserializeOwned;

/// A website response other than success, or no response at all.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("website {}: {message}", status.map_or("unreachable".to_string(), |s| s.to_string()))]
pub struct WebsiteFailure {
    pub status: Option<u16>,
    pub code: Option<String>,
    pub message: String,
}

pub struct WebsiteClient {
    http: reqwest::Client,
    base: String,
}

impl WebsiteClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_owned(),
        }
    }

    pub async fn challenge(&self) -> Result<ChallengeIssued, WebsiteFailure> {
        self.send(self.http.get(format!("{}/login/challenge", self.base))).await
    }

    pub async fn login(
        &self,
        challenge_id: String,
        session_key_id: SessionKeyId,
        hmac_hex: HmacTag,
    ) -> Result<SessionIssued, WebsiteFailure> {
        let body = LoginRequest {
            session_key_id,
            hmac_hex,
            challenge_id,
        };
        self.send(self.http.post(format!("{}/login", self.base)).json(&body)).await
    }

    pub async fn field(&self, token: &str, field: ProfileField) -> Result<FieldValue, WebsiteFailure> {
        self.send(
            self.http
                .get(format!("{}/api/profile/{field}", self.base))
                .bearer_auth(token),
        )
        .await
    }

    pub async fn purchase(&self, token: &str, item: &str) -> Result<PurchaseRecord, WebsiteFailure> {
        let body = PurchaseRequest { item: item.to_owned() };
        self.send(
            self.http
                .post(format!("{}/api/purchase", self.base))
                .bearer_auth(token)
                .json(&body),
        )
        .await
    }

    async fn send<T: DeserializeOwned>(&self, rb: reqwest::RequestBuilder) -> Result<T, WebsiteFailure> {
        let resp = rb.send().await.map_err(|e| WebsiteFailure {
            status: None,
            code: None,
            message: format!("cannot reach {}: {e}", self.base),
        })?;
        let status = resp.status().as_u16();
        if resp.status().is_success() {
            return resp.json().await.map_err(|e| WebsiteFailure {
                status: Some(status),
                code: None,
                message: format!("undecodable response: {e}"),
            });
        }
        Err(match resp.json::<WebsiteErrorBody>().await {
            Ok(body) => WebsiteFailure {
                status: Some(status),
                code: serde_json::to_value(body.error)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned)),
                message: body.message,
            },
            Err(_) => WebsiteFailure {
                status: Some(status),
                code: None,
                message: "error response without body".into(),
            },
        })
    }
}
