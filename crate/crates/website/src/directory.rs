//! Where the website obtains session keys.

use async_trait::async_trait;
use delegate_auth::{AuthClient, AuthClientError, ErrorCode, SessionKeyId, SessionKeyResponse};

use crate::WebsiteError;

#[async_trait]
pub trait KeyDirectory: Send + Sync {
    /// One signed redemption of `id` on behalf of the website entity.
    async fn redeem(&self, id: SessionKeyId) -> Result<SessionKeyResponse, WebsiteError>;
}

#[async_trait]
impl KeyDirectory for AuthClient {
    async fn redeem(&self, id: SessionKeyId) -> Result<SessionKeyResponse, WebsiteError> {
        self.request_session_key(id).await.map_err(|e| match e {
            AuthClientError::Rejected {
                code: ErrorCode::Expired,
                ..
            } => WebsiteError::KeyExpired(id),
            AuthClientError::Rejected { code, message, .. } => {
                WebsiteError::Authentication(format!("Auth refused key {id} ({code:?}): {message}"))
            }
            other => WebsiteError::Upstream(other.to_string()),
        })
    }
}
