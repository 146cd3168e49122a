mod common;

use common::{agent_for, Stack};
use delegate_agent::Channel;
use delegate_core::TrustLevel;
use delegate_website::ProfileField;
use proptest::prelude::*;

fn trust() -> impl Strategy<Value = TrustLevel> {
    prop_oneof![Just(TrustLevel::High), Just(TrustLevel::Medium), Just(TrustLevel::Low)]
}

fn field() -> impl Strategy<Value = ProfileField> {
    proptest::sample::select(ProfileField::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Denied fields still cost exactly one request each and are never retried.
    #[test]
    fn website_requests_are_two_plus_n(trust in trust(), fields in proptest::collection::vec(field(), 0..8), seed in 1u64..1000) {
        let rt = tokio::runtime::Runtime::new().unwrap();
        let t = rt.block_on(async {
            let s = Stack::start(seed, 3600, 86_400).await;
            let id = s.delegate(trust);
            s.agent(agent_for(trust), id, &fields, None).run().await
        });
        prop_assert!(t.failure.is_none(), "{:?}", t.failure);
        prop_assert_eq!(t.requests_on(Channel::AgentWebsite), 2 + fields.len());
        prop_assert_eq!(t.requests_on(Channel::AgentAuth), 1);
        prop_assert_eq!(t.fields.len(), fields.len());
        prop_assert!(t.timestamps_monotone());
    }
}
