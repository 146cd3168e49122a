//! Auth over real HTTP: status mapping and the signed envelope.

use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::DateTime;
use delegate_auth::wire::RegisterEntityRequest;
use delegate_auth::{
    http, AuthClient, AuthClientError, AuthConfig, AuthOperation, AuthService, CommunicationPolicy,
    ErrorCode, Identity, SignedRequest,
};
use delegate_core::{
    Clock, CryptoSpec, EntityName, GroupName, ManualClock, SeededRandom, SharedClock, TrustLevel,
};

const ADMIN: &str = "admin-secret";

struct Harness {
    base: String,
    clock: Arc<ManualClock>,
}

async fn serve() -> Harness {
    let clock = Arc::new(ManualClock::new(DateTime::from_timestamp(1_750_000_000, 0).unwrap()));
    let service = Arc::new(AuthService::in_memory(clock.clone(), Arc::new(SeededRandom::new(3)), AuthConfig::default()));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, http::router(service, ADMIN)).await.unwrap();
    });
    Harness {
        base: format!("http://{addr}"),
        clock,
    }
}

impl Harness {
    fn admin(&self) -> AuthClient {
        AuthClient::new(&self.base, self.clock.clone() as SharedClock, Arc::new(SeededRandom::new(9))).with_admin_token(ADMIN)
    }

    async fn entity(&self, name: &str, group: GroupName) -> AuthClient {
        let view = self
            .admin()
            .register_entity(&RegisterEntityRequest {
                name: EntityName::new(name).unwrap(),
                group,
                crypto: None,
                distribution_key: None,
            })
            .await
            .unwrap();
        AuthClient::new(&self.base, self.clock.clone() as SharedClock, Arc::new(SeededRandom::new(name.len() as u64)))
            .with_identity(Identity {
                name: view.name,
                key: view.distribution_key,
                spec: view.crypto,
            })
    }
}

fn rejected(e: AuthClientError) -> (u16, ErrorCode) {
    match e {
        AuthClientError::Rejected { status, code, .. } => (status, code),
        other => panic!("expected rejection, got {other}"),
    }
}

#[tokio::test]
async fn full_flow_and_status_mapping() {
    let h = serve().await;
    h.admin().health().await.unwrap();
    let alice = h.entity("userAlice", GroupName::users()).await;
    let site = h.entity("myWebsite", GroupName::websites()).await;
    let business = h.entity("Business", TrustLevel::High.group()).await;
    let casual = h.entity("Casual", TrustLevel::Low.group()).await;
    h.admin()
        .add_policy(&CommunicationPolicy::delegation(
            GroupName::users(),
            TrustLevel::High.group(),
            GroupName::websites(),
            StdDuration::from_secs(60),
            StdDuration::from_secs(600),
        ))
        .await
        .unwrap();

    let created = alice
        .create_delegation(TrustLevel::High, GroupName::websites(), "shop")
        .await
        .unwrap();
    let id = created.session_key_id;

    let low = alice.create_delegation(TrustLevel::Low, GroupName::websites(), "").await.unwrap_err();
    assert_eq!(rejected(low), (403, ErrorCode::Denied));

    assert_eq!(rejected(casual.request_session_key(id).await.unwrap_err()), (403, ErrorCode::Denied));
    assert_eq!(rejected(business.request_session_key(999).await.unwrap_err()), (403, ErrorCode::UnknownKey));
    let agent_key = business.request_session_key(id).await.unwrap();
    assert_eq!(
        rejected(business.request_session_key(id).await.unwrap_err()),
        (403, ErrorCode::DuplicateIssuance)
    );
    let site_key = site.request_session_key(id).await.unwrap();
    assert_eq!(site_key.key, agent_key.key);
    assert_eq!(site_key.prior_owners[0].entity.as_str(), "Business");

    let second = alice.create_delegation(TrustLevel::High, GroupName::websites(), "").await.unwrap();
    h.clock.advance(chrono::Duration::seconds(600));
    assert_eq!(
        rejected(business.request_session_key(second.session_key_id).await.unwrap_err()),
        (410, ErrorCode::Expired)
    );
}

#[tokio::test]
async fn bad_signature_is_401_and_replay_is_409() {
    let h = serve().await;
    let alice = h.entity("userAlice", GroupName::users()).await;
    let view = h
        .admin()
        .register_entity(&RegisterEntityRequest {
            name: EntityName::new("Business").unwrap(),
            group: TrustLevel::High.group(),
            crypto: None,
            distribution_key: None,
        })
        .await
        .unwrap();
    let forged = SignedRequest::sign(
        &view.name,
        &delegate_core::KeyMaterial::from_bytes(vec![1u8; 32]),
        &CryptoSpec::default(),
        h.clock.now(),
        &SeededRandom::new(1),
        &AuthOperation::RequestSessionKey { id: 1 },
    )
    .unwrap();
    let err = alice.send_signed_raw("/session-keys/1/request", &forged).await.unwrap_err();
    assert_eq!(rejected(err), (401, ErrorCode::AuthenticationFailed));

    let good = SignedRequest::sign(
        &view.name,
        &view.distribution_key,
        &view.crypto,
        h.clock.now(),
        &SeededRandom::new(1),
        &AuthOperation::RequestSessionKey { id: 1 },
    )
    .unwrap();
    let first = alice.send_signed_raw("/session-keys/1/request", &good).await.unwrap_err();
    assert_eq!(rejected(first), (403, ErrorCode::UnknownKey));
    let again = alice.send_signed_raw("/session-keys/1/request", &good).await.unwrap_err();
    assert_eq!(rejected(again), (409, ErrorCode::Replay));

    let mismatch = alice.send_signed_raw("/session-keys/2/request", &good).await.unwrap_err();
    assert_eq!(rejected(mismatch), (400, ErrorCode::InvalidRequest));
}

#[tokio::test]
async fn admin_endpoints_require_the_token_and_registration_conflicts() {
    let h = serve().await;
    let anon = AuthClient::new(&h.base, h.clock.clone() as SharedClock, Arc::new(SeededRandom::new(1)));
    let req = RegisterEntityRequest {
        name: EntityName::new("userAlice").unwrap(),
        group: GroupName::users(),
        crypto: None,
        distribution_key: None,
    };
    assert_eq!(rejected(anon.register_entity(&req).await.unwrap_err()), (401, ErrorCode::AuthenticationFailed));
    h.admin().register_entity(&req).await.unwrap();
    assert_eq!(rejected(h.admin().register_entity(&req).await.unwrap_err()), (409, ErrorCode::Conflict));

    let bad = CommunicationPolicy::delegation(
        GroupName::users(),
        GroupName::websites(),
        GroupName::websites(),
        StdDuration::from_secs(1),
        StdDuration::from_secs(1),
    );
    assert_eq!(rejected(h.admin().add_policy(&bad).await.unwrap_err()), (400, ErrorCode::InvalidRequest));
    let good = CommunicationPolicy::delegation(
        GroupName::users(),
        TrustLevel::Low.group(),
        GroupName::websites(),
        StdDuration::from_secs(1),
        StdDuration::from_secs(1),
    );
    let id = h.admin().add_policy(&good).await.unwrap();
    assert_eq!(h.admin().add_policy(&good).await.unwrap(), id);
    assert_eq!(h.admin().list_policies().await.unwrap().len(), 1);
    h.admin().remove_policy(id).await.unwrap();
    assert!(h.admin().list_policies().await.unwrap().is_empty());
    let stats = h.admin().stats().await.unwrap();
    assert_eq!(stats.entities, 1);
}
