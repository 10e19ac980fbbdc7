//! Brute-force verification that a linked key assignment hands every user
//! and coalition exactly its entitlement, nothing more.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::access::{AccessStructure, ResourceId, UserId};
use crate::error::{Error, Result};
use crate::linker::{stored_resources, LinkForest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Subject is entitled to the resource but cannot derive its key.
    MissingEntitlement,
    /// Subject can derive a key it is not entitled to.
    ExcessDerivation,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub subject: Vec<UserId>,
    pub resource: ResourceId,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    pub coalitions_checked: usize,
}

impl AuditReport {
    fn from_violations(violations: Vec<Violation>, coalitions_checked: usize) -> Self {
        AuditReport {
            ok: violations.is_empty(),
            violations,
            coalitions_checked,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn check_subject(
    s: &AccessStructure,
    f: &LinkForest,
    subject: &[&UserId],
    violations: &mut Vec<Violation>,
) {
    let mut held = BTreeSet::new();
    let mut entitled = BTreeSet::new();
    for u in subject {
        held.extend(stored_resources(s, f, u));
        entitled.extend(s.entitlement(u));
    }
    let closure = f.derivation_closure(&held);
    for r in entitled.difference(&closure) {
        violations.push(Violation {
            subject: subject.iter().map(|&u| u.clone()).collect(),
            resource: r.clone(),
            kind: ViolationKind::MissingEntitlement,
        });
    }
    for r in closure.difference(&entitled) {
        violations.push(Violation {
            subject: subject.iter().map(|&u| u.clone()).collect(),
            resource: r.clone(),
            kind: ViolationKind::ExcessDerivation,
        });
    }
}

/// Per-user check: the derivation closure of what each user stores must be
/// exactly the set of resources the user is privileged for.
pub fn check_soundness(s: &AccessStructure, f: &LinkForest) -> AuditReport {
    let mut violations = Vec::new();
    let mut checked = 0;
    for u in s.users() {
        check_subject(s, f, &[u], &mut violations);
        checked += 1;
    }
    AuditReport::from_violations(violations, checked)
}

/// Exhaustive-mode instance cap; beyond this, coalitions are sampled.
pub const EXHAUSTIVE_USER_LIMIT: usize = 16;
const SAMPLED_COALITIONS: usize = 10_000;

/// Coalition check on an ideal structure: every coalition of size up to
/// `max_coalition` must derive exactly the union of its members'
/// entitlements. Exhaustive up to 16 users, seeded sampling beyond.
pub fn check_collusion(
    s: &AccessStructure,
    f: &LinkForest,
    max_coalition: usize,
) -> Result<AuditReport> {
    if !s.is_ideal() {
        return Err(Error::Validation(
            "collusion audit requires an ideal access structure".into(),
        ));
    }
    let users: Vec<&UserId> = s.users().iter().collect();
    let n = users.len();
    let max_coalition = max_coalition.min(n);
    let mut violations = Vec::new();
    let mut checked = 0;

    if n <= EXHAUSTIVE_USER_LIMIT {
        // enumerate all non-empty subsets of size <= max_coalition
        for mask in 1u32..(1u32 << n) {
            if (mask.count_ones() as usize) > max_coalition {
                continue;
            }
            let subject: Vec<&UserId> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| users[i])
                .collect();
            check_subject(s, f, &subject, &mut violations);
            checked += 1;
        }
    } else {
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6b65796c696e6b);
        for _ in 0..SAMPLED_COALITIONS {
            let size = rng.gen_range(1..=max_coalition);
            let subject: Vec<&UserId> =
                users.choose_multiple(&mut rng, size).copied().collect();
            check_subject(s, f, &subject, &mut violations);
            checked += 1;
        }
    }
    Ok(AuditReport::from_violations(violations, checked))
}
