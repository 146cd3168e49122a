//! HTTP + JSON front end for [`WebsiteService`].

use std::path::{Component, Path as FsPath, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::Engine;
use delegate_auth::SessionKeyId;
use delegate_core::{GroupName, HmacTag, TrustLevel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::model::ProfileField;
use crate::service::{HumanCredential, WebsiteService};
use crate::{WebsiteError, WebsiteErrorBody};

impl IntoResponse for WebsiteError {
    fn into_response(self) -> Response {
        let code = self.code();
        let status = StatusCode::from_u16(code.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        } else {
            tracing::debug!(error = %self, "request rejected");
        }
        let body = WebsiteErrorBody {
            error: code,
            message: self.to_string(),
        };
        let mut resp = (status, Json(body)).into_response();
        if matches!(self, WebsiteError::Unauthorized) {
            resp.headers_mut().insert(
                header::WWW_AUTHENTICATE,
                header::HeaderValue::from_static("Basic realm=\"delegate-website\""),
            );
        }
        resp
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoginRequest {
    pub session_key_id: SessionKeyId,
    pub hmac_hex: HmacTag,
    pub challenge_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldValue {
    pub field: ProfileField,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PurchaseRequest {
    pub item: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScopeUpdate {
    pub allowed_fields: Vec<ProfileField>,
    pub may_purchase: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelegationRequest {
    pub trust: TrustLevel,
}

pub fn router(service: Arc<WebsiteService>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/login/challenge", get(challenge))
        .route("/login", get(login_page).post(login))
        .route("/api/profile/{field}", get(profile_field))
        .route("/api/purchase", post(purchase))
        .route("/api/scopes", get(list_scopes))
        .route("/api/scopes/{agent_group}", put(set_scope))
        .route("/api/sessions", get(sessions))
        .route("/api/purchases", get(purchases))
        .route("/api/audit", get(audit))
        .route("/api/delegations", post(create_delegation).get(delegations))
        .route("/api/stats", get(stats))
        .with_state(service);
    match static_dir {
        Some(dir) => {
            let dir: Arc<FsPath> = dir.into();
            api.fallback(move |uri: axum::http::Uri| serve_static(dir.clone(), uri))
        }
        None => api,
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, WebsiteError> {
    serde_json::from_slice(body).map_err(|e| WebsiteError::Invalid(format!("malformed JSON: {e}")))
}

fn bearer(headers: &HeaderMap) -> Result<&str, WebsiteError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or(WebsiteError::SessionInvalid)
}

fn human(service: &WebsiteService, headers: &HeaderMap) -> Result<HumanCredential, WebsiteError> {
    let encoded = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Basic "))
        .ok_or(WebsiteError::Unauthorized)?;
    let decoded = base64::engine::general_purpose::STANDARD
        .decode(encoded)
        .map_err(|_| WebsiteError::Unauthorized)?;
    let decoded = String::from_utf8(decoded).map_err(|_| WebsiteError::Unauthorized)?;
    let (username, password) = decoded.split_once(':').ok_or(WebsiteError::Unauthorized)?;
    let cred = HumanCredential {
        username: username.to_owned(),
        password: password.to_owned(),
    };
    service.authenticate_human(&cred)?;
    Ok(cred)
}

async fn challenge(State(svc): State<Arc<WebsiteService>>) -> Result<Response, WebsiteError> {
    svc.note_agent_request();
    Ok(Json(svc.issue_challenge()?).into_response())
}

async fn login_page(State(svc): State<Arc<WebsiteService>>) -> Result<Html<String>, WebsiteError> {
    svc.note_agent_request();
    let c = svc.issue_challenge()?;
    Ok(Html(format!(
        "<!doctype html>\n<html><head><title>Agent login</title></head><body>\n\
         <h1>Agent login</h1>\n\
         <p>Sign this nonce with your session key and submit it with the key id.</p>\n\
         <p>Nonce: <code id=\"nonce\">{}</code></p>\n\
         <form method=\"post\" action=\"/login\">\n\
         <input type=\"hidden\" name=\"challenge_id\" id=\"challenge_id\" value=\"{}\">\n\
         <label>Session key id <input name=\"session_key_id\"></label>\n\
         <label>HMAC (hex) <input name=\"hmac_hex\"></label>\n\
         </form>\n</body></html>\n",
        c.nonce.as_str(),
        c.challenge_id
    )))
}

async fn login(State(svc): State<Arc<WebsiteService>>, body: Bytes) -> Result<Response, WebsiteError> {
    svc.note_agent_request();
    let req: LoginRequest = parse(&body)?;
    let issued = svc
        .authenticate_agent(&req.challenge_id, req.session_key_id, &req.hmac_hex)
        .await?;
    Ok(Json(issued).into_response())
}

async fn profile_field(
    State(svc): State<Arc<WebsiteService>>,
    Path(field): Path<String>,
    headers: HeaderMap,
) -> Result<Response, WebsiteError> {
    svc.note_agent_request();
    let token = bearer(&headers)?;
    let field: ProfileField = field.parse()?;
    let value = svc.get_profile_field(token, field)?;
    Ok(Json(FieldValue { field, value }).into_response())
}

async fn purchase(
    State(svc): State<Arc<WebsiteService>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, WebsiteError> {
    svc.note_agent_request();
    let token = bearer(&headers)?;
    let req: PurchaseRequest = parse(&body)?;
    let record = svc.execute_purchase(token, &req.item)?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn list_scopes(State(svc): State<Arc<WebsiteService>>, headers: HeaderMap) -> Result<Response, WebsiteError> {
    human(&svc, &headers)?;
    Ok(Json(svc.scopes()).into_response())
}

async fn set_scope(
    State(svc): State<Arc<WebsiteService>>,
    Path(agent_group): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, WebsiteError> {
    let cred = human(&svc, &headers)?;
    let group = GroupName::new(agent_group).map_err(WebsiteError::from)?;
    let update: ScopeUpdate = parse(&body)?;
    svc.configure_scope(&cred, group, update.allowed_fields, update.may_purchase)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn sessions(State(svc): State<Arc<WebsiteService>>, headers: HeaderMap) -> Result<Response, WebsiteError> {
    human(&svc, &headers)?;
    svc.expire_sessions(svc.now());
    Ok(Json(svc.sessions()).into_response())
}

async fn purchases(State(svc): State<Arc<WebsiteService>>, headers: HeaderMap) -> Result<Response, WebsiteError> {
    human(&svc, &headers)?;
    Ok(Json(svc.purchases()).into_response())
}

async fn audit(State(svc): State<Arc<WebsiteService>>, headers: HeaderMap) -> Result<Response, WebsiteError> {
    human(&svc, &headers)?;
    Ok(Json(svc.audit_log()).into_response())
}

async fn create_delegation(
    State(svc): State<Arc<WebsiteService>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, WebsiteError> {
    let cred = human(&svc, &headers)?;
    let req: DelegationRequest = parse(&body)?;
    let record = svc.create_delegation(&cred, req.trust).await?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn delegations(State(svc): State<Arc<WebsiteService>>, headers: HeaderMap) -> Result<Response, WebsiteError> {
    human(&svc, &headers)?;
    Ok(Json(svc.delegations()).into_response())
}

async fn stats(State(svc): State<Arc<WebsiteService>>) -> Json<crate::service::WebsiteStats> {
    Json(svc.stats())
}

fn content_type(path: &FsPath) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

/// Serves files of the UI bundle; `/` maps to `index.html` and any path
/// that would leave `dir` is rejected.
async fn serve_static(dir: Arc<FsPath>, uri: axum::http::Uri) -> Response {
    let rel = uri.path().trim_start_matches('/');
    let rel = FsPath::new(if rel.is_empty() { "index.html" } else { rel });
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = dir.join(rel);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}
