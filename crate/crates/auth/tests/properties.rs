//! Randomized operation sequences against the Auth tables.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Duration as StdDuration;

use chrono::{DateTime, Duration};
use delegate_auth::{AuthConfig, AuthError, AuthOperation, AuthService, CommunicationPolicy, SignedRequest};
use delegate_core::{Clock, CryptoSpec, EntityName, GroupName, ManualClock, SeededRandom, TrustLevel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ENTITIES: [(&str, &str); 8] = [
    ("userAlice", "Users"),
    ("myWebsite", "Websites"),
    ("otherSite", "Websites"),
    ("Business", "HighTrustAgents"),
    ("Business2", "HighTrustAgents"),
    ("Personal", "MediumTrustAgents"),
    ("Casual", "LowTrustAgents"),
    ("Casual2", "LowTrustAgents"),
];

struct World {
    auth: AuthService,
    clock: Arc<ManualClock>,
    signer_rng: SeededRandom,
    policy_ids: BTreeMap<TrustLevel, u64>,
}

impl World {
    fn new(seed: u64) -> Self {
        let clock = Arc::new(ManualClock::new(DateTime::from_timestamp(1_750_000_000, 0).unwrap()));
        let auth = AuthService::in_memory(clock.clone(), Arc::new(SeededRandom::new(seed)), AuthConfig::default());
        for (n, g) in ENTITIES {
            auth.register_entity(EntityName::new(n).unwrap(), GroupName::new(g).unwrap(), CryptoSpec::default(), None)
                .unwrap();
        }
        let mut w = Self {
            auth,
            clock,
            signer_rng: SeededRandom::new(seed ^ 0xabcdef),
            policy_ids: BTreeMap::new(),
        };
        for t in TrustLevel::ALL {
            w.install_policy(t);
        }
        w
    }

    fn policy(t: TrustLevel) -> CommunicationPolicy {
        let (rel, abs) = match t {
            TrustLevel::High => (300, 900),
            TrustLevel::Medium => (200, 600),
            TrustLevel::Low => (100, 300),
        };
        CommunicationPolicy::delegation(
            GroupName::users(),
            t.group(),
            GroupName::websites(),
            StdDuration::from_secs(rel),
            StdDuration::from_secs(abs),
        )
    }

    fn install_policy(&mut self, t: TrustLevel) {
        let (id, _) = self.auth.add_policy(Self::policy(t)).unwrap();
        self.policy_ids.insert(t, id);
    }

    fn sign(&self, who: &str, op: AuthOperation) -> SignedRequest {
        let e = self.auth.entity(&EntityName::new(who).unwrap()).unwrap();
        SignedRequest::sign(&e.name, &e.distribution_key, &e.dist_key_spec, self.clock.now(), &self.signer_rng, &op).unwrap()
    }
}

fn run_sequence(seed: u64, ops: usize) {
    let mut w = World::new(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut issued: HashMap<(u64, GroupName), u32> = HashMap::new();
    let mut expirations: HashMap<u64, DateTime<chrono::Utc>> = HashMap::new();
    let mut last_id = 0u64;

    for _ in 0..ops {
        match rng.random_range(0..10) {
            0..=2 => {
                let t = TrustLevel::ALL[rng.random_range(0..3)];
                let who = if rng.random_bool(0.9) { "userAlice" } else { ENTITIES[rng.random_range(1..8)].0 };
                let req = w.sign(who, AuthOperation::CreateDelegation {
                    trust: t,
                    target_group: GroupName::websites(),
                    purpose: String::new(),
                });
                match w.auth.create_delegated_session_key(&req) {
                    Ok(c) => {
                        assert_eq!(who, "userAlice");
                        assert!(w.policy_ids.contains_key(&t));
                        assert!(c.session_key_id > last_id, "ids must strictly increase");
                        last_id = c.session_key_id;
                        expirations.insert(c.session_key_id, c.absolute_expiration);
                    }
                    Err(AuthError::Denied(_)) => {
                        assert!(who != "userAlice" || !w.policy_ids.contains_key(&t));
                    }
                    Err(e) => panic!("unexpected create error {e}"),
                }
            }
            3..=6 => {
                let id = rng.random_range(1..=last_id + 2);
                let (who, group) = ENTITIES[rng.random_range(0..8)];
                let req = w.sign(who, AuthOperation::RequestSessionKey { id });
                let now = w.clock.now();
                match w.auth.request_session_key(&req) {
                    Ok(resp) => {
                        let exp = expirations[&id];
                        assert!(now < exp, "issued after absolute expiration");
                        assert!(resp.expected_owner_groups.iter().any(|g| g.as_str() == group));
                        let n = issued.entry((id, GroupName::new(group).unwrap())).or_default();
                        *n += 1;
                        assert_eq!(*n, 1, "duplicate issuance to group {group} for key {id}");
                    }
                    Err(AuthError::Expired(_)) | Err(AuthError::UnknownKey(_)) => {
                        if let Some(exp) = expirations.get(&id) {
                            assert!(now >= *exp || w.auth.session_key(id).is_none());
                        }
                    }
                    Err(AuthError::Denied(_)) | Err(AuthError::DuplicateIssuance(_)) => {}
                    Err(e) => panic!("unexpected redeem error {e}"),
                }
            }
            7 => w.clock.advance(Duration::seconds(rng.random_range(1..120))),
            8 => {
                w.auth.purge_expired_keys(w.clock.now()).unwrap();
            }
            _ => {
                let t = TrustLevel::ALL[rng.random_range(0..3)];
                if let Some(id) = w.policy_ids.remove(&t) {
                    w.auth.remove_policy(id).unwrap();
                } else {
                    w.install_policy(t);
                }
            }
        }
        for key in w.auth.session_keys() {
            assert!(key.owners_sound(), "owner soundness violated for key {}", key.id);
        }
    }
}

#[test]
fn thousand_op_sequences_preserve_invariants() {
    for seed in [1, 7, 42, 1234] {
        run_sequence(seed, 1500);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn random_sequences_preserve_invariants(seed in any::<u64>()) {
        run_sequence(seed, 300);
    }
}
