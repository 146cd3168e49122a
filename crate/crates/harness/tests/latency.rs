use std::time::Duration;

use delegate_harness::{compute_total_latency, LatencyModelParams};
use proptest::prelude::*;

fn params(e: u64, a: u64, w: u64, aw: u64, n: u32) -> LatencyModelParams {
    LatencyModelParams {
        l_e2e: Duration::from_nanos(e),
        l_a2a: Duration::from_nanos(a),
        l_w2a: Duration::from_nanos(w),
        l_a2w: Duration::from_nanos(aw),
        n,
    }
}

const MAX: u64 = 1_000_000_000_000;

proptest! {
    #[test]
    fn total_grows_by_one_agent_website_latency_per_field(
        e in 0..MAX, a in 0..MAX, w in 0..MAX, aw in 0..MAX, n in 0u32..1000,
    ) {
        let lo = compute_total_latency(&params(e, a, w, aw, n)).unwrap();
        let hi = compute_total_latency(&params(e, a, w, aw, n + 1)).unwrap();
        prop_assert_eq!(hi - lo, Duration::from_nanos(aw));
    }

    #[test]
    fn total_is_additive_in_each_component(
        e in 0..MAX, a in 0..MAX, w in 0..MAX, aw in 0..MAX, n in 0u32..1000,
    ) {
        let total = compute_total_latency(&params(e, a, w, aw, n)).unwrap();
        let parts = [
            params(e, 0, 0, 0, n),
            params(0, a, 0, 0, n),
            params(0, 0, w, 0, n),
            params(0, 0, 0, aw, n),
        ];
        let sum: Duration = parts.iter().map(|p| compute_total_latency(p).unwrap()).sum();
        prop_assert_eq!(total, sum);
    }
}
