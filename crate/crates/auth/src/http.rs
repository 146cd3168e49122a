//! HTTP + JSON front end for [`AuthService`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use delegate_core::constant_time_equal;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::model::{CommunicationPolicy, PolicyId, SessionKeyId};
use crate::service::AuthService;
use crate::wire::{
    AuthOperation, PolicyCreated, PolicyEntry, RegisterEntityRequest, RegisteredEntityView,
    SignedRequest,
};
use crate::{AuthError, ErrorBody};

#[derive(Clone)]
struct AppState {
    service: Arc<AuthService>,
    admin_token: Arc<str>,
}

impl IntoResponse for AuthError {
    fn into_response(self) -> Response {
        let code = self.code();
        let status = StatusCode::from_u16(code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        } else {
            tracing::debug!(error = %self, "request rejected");
        }
        let body = ErrorBody {
            error: code,
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

pub fn router(service: Arc<AuthService>, admin_token: impl Into<String>) -> Router {
    let state = AppState {
        service,
        admin_token: admin_token.into().into(),
    };
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/entities", post(register_entity))
        .route("/policies", post(add_policy).get(list_policies))
        .route("/policies/{id}", delete(remove_policy))
        .route("/delegations", post(create_delegation))
        .route("/session-keys/{id}/request", post(request_session_key))
        .route("/stats", get(stats))
        .route("/maintenance/purge", post(purge))
        .with_state(state)
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, AuthError> {
    serde_json::from_slice(body).map_err(|e| AuthError::Invalid(format!("malformed JSON: {e}")))
}

fn require_admin(state: &AppState, headers: &HeaderMap) -> Result<(), AuthError> {
    let presented = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .unwrap_or_default();
    if state.admin_token.is_empty()
        || !constant_time_equal(presented.as_bytes(), state.admin_token.as_bytes())
    {
        return Err(AuthError::Authentication("admin credential required".into()));
    }
    Ok(())
}

fn created_or_ok<T: Serialize>(created: bool, body: T) -> Response {
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    (status, Json(body)).into_response()
}

async fn register_entity(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, AuthError> {
    require_admin(&state, &headers)?;
    let req: RegisterEntityRequest = parse(&body)?;
    let spec = req.crypto.unwrap_or_default();
    let (entity, created) = state
        .service
        .register_entity(req.name, req.group, spec, req.distribution_key)?;
    Ok(created_or_ok(
        created,
        RegisteredEntityView {
            name: entity.name,
            group: entity.group,
            distribution_key: entity.distribution_key,
            crypto: entity.dist_key_spec,
            absolute_expiration: entity.dist_key_validity.absolute_expiration,
        },
    ))
}

async fn add_policy(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, AuthError> {
    require_admin(&state, &headers)?;
    let policy: CommunicationPolicy = parse(&body)?;
    let (id, created) = state.service.add_policy(policy)?;
    Ok(created_or_ok(created, PolicyCreated { id }))
}

async fn list_policies(
    State(state): State<AppState>,
    headers: HeaderMap,
) -> Result<Json<Vec<PolicyEntry>>, AuthError> {
    require_admin(&state, &headers)?;
    Ok(Json(
        state
            .service
            .policies()
            .into_iter()
            .map(|(id, policy)| PolicyEntry { id, policy })
            .collect(),
    ))
}

async fn remove_policy(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(id): Path<PolicyId>,
) -> Result<StatusCode, AuthError> {
    require_admin(&state, &headers)?;
    state.service.remove_policy(id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn create_delegation(State(state): State<AppState>, body: Bytes) -> Result<Response, AuthError> {
    let req: SignedRequest = parse(&body)?;
    let created = state.service.create_delegated_session_key(&req)?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn request_session_key(
    State(state): State<AppState>,
    Path(id): Path<SessionKeyId>,
    body: Bytes,
) -> Result<Response, AuthError> {
    let req: SignedRequest = parse(&body)?;
    match req.operation()? {
        AuthOperation::RequestSessionKey { id: body_id } if body_id == id => {}
        _ => return Err(AuthError::Invalid("signed body does not match the key id in the path".into())),
    }
    let resp = state.service.request_session_key(&req)?;
    Ok(Json(resp).into_response())
}

async fn stats(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, AuthError> {
    require_admin(&state, &headers)?;
    Ok(Json(state.service.stats()).into_response())
}

async fn purge(State(state): State<AppState>, headers: HeaderMap) -> Result<Response, AuthError> {
    require_admin(&state, &headers)?;
    let now = state.service.now();
    let purged = state.service.purge_expired_keys(now)?;
    Ok(Json(serde_json::json!({ "purged": purged })).into_response())
}
