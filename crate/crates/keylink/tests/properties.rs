mod common;

use std::collections::BTreeSet;

use keylink::access::{AccessStructure, MembershipMode};
use keylink::audit::check_soundness;
use keylink::gen::random_ideal_structure;
use keylink::linker::{greedy_link, lower_bound, storage_report, stored_resources};
use proptest::prelude::*;
use rand::SeedableRng;

fn arb_structure() -> impl Strategy<Value = AccessStructure> {
    (any::<u64>(), 1usize..=8, 0usize..=15).prop_map(|(seed, n, m)| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        random_ideal_structure(&mut rng, n, m).unwrap()
    })
}

proptest! {
    #[test]
    fn parse_serialize_round_trip(s in arb_structure()) {
        let back = AccessStructure::parse(s.to_json().as_bytes(), MembershipMode::Strict).unwrap();
        prop_assert_eq!(s, back);
    }

    #[test]
    fn bipartite_edge_count_identity(s in arb_structure()) {
        let by_users: usize = s.users().iter().map(|u| s.user_degree(u).unwrap()).sum();
        let by_resources: usize = s.resources().iter().map(|r| r.privileged.len()).sum();
        prop_assert_eq!(by_users, by_resources);
    }

    #[test]
    fn greedy_forest_is_valid_and_sound(s in arb_structure()) {
        let f = greedy_link(&s);
        f.validate(&s).unwrap();
        // every link shrinks some user's storage, never widens access
        prop_assert!(check_soundness(&s, &f).ok);
        // closure of a user's stored keys is exactly its entitlement
        for u in s.users() {
            let held = stored_resources(&s, &f, u);
            prop_assert_eq!(f.derivation_closure(&held), s.entitlement(u));
        }
    }

    #[test]
    fn storage_respects_lower_bound(s in arb_structure()) {
        let f = greedy_link(&s);
        let report = storage_report(&s, &f).unwrap();
        prop_assert!(report.max_storage >= lower_bound(&s));
        prop_assert!(report.total_stored >= s.distinct_membership_count());
    }

    #[test]
    fn coalition_closure_equals_union(s in arb_structure(), mask in 1u32..256) {
        let f = greedy_link(&s);
        let users: Vec<_> = s.users().iter().collect();
        let members: Vec<_> = (0..users.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| users[i])
            .collect();
        let mut joint = BTreeSet::new();
        let mut union = BTreeSet::new();
        for u in members {
            let held = stored_resources(&s, &f, u);
            union.extend(f.derivation_closure(&held));
            joint.extend(held);
        }
        prop_assert_eq!(f.derivation_closure(&joint), union);
    }
}
