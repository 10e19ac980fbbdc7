//! Seeded random test-structure generation.

use rand::Rng;

use crate::access::{AccessStructure, MembershipMode, ResourceId, UserId};
use crate::error::{Error, Result};

/// Random ideal access structure with `n_users` users and up to
/// `max_resources` resources with distinct privileged memberships. Fully
/// determined by the RNG state.
pub fn random_ideal_structure(
    rng: &mut impl Rng,
    n_users: usize,
    max_resources: usize,
) -> Result<AccessStructure> {
    if n_users == 0 || n_users > 31 {
        return Err(Error::Validation("n_users must be in 1..=31".into()));
    }
    let users: Vec<UserId> = (0..n_users)
        .map(|i| UserId::new(format!("u{i:02}")))
        .collect::<Result<Vec<_>>>()?;
    let all_masks = (1u64 << n_users) - 1;
    let max_resources = max_resources.min(all_masks as usize);
    let mut memberships = std::collections::BTreeSet::new();
    while memberships.len() < max_resources {
        memberships.insert(rng.gen_range(1..=all_masks));
    }
    let resources = memberships
        .into_iter()
        .enumerate()
        .map(|(i, mask)| {
            let privileged = (0..n_users)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| users[b].clone())
                .collect();
            Ok((ResourceId::new(format!("r{i:03}"))?, privileged, None))
        })
        .collect::<Result<Vec<_>>>()?;
    AccessStructure::new(users, resources, MembershipMode::Strict)
}
