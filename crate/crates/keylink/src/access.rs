//! Access structures: users, resources, privileged/forbidden sets, and the
//! bipartite entitlement view.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User identifier. Printable, non-empty, no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

/// Resource identifier. Doubles as the public label fed to the PRF when a
/// key is derived for this resource.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub String);

impl UserId {
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        check_ident(&s)?;
        Ok(UserId(s))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl ResourceId {
    pub fn new(s: impl Into<String>) -> Result<Self> {
        let s = s.into();
        check_ident(&s)?;
        Ok(ResourceId(s))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for UserId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for ResourceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn check_ident(s: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Validation("empty identifier".into()));
    }
    if s.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(Error::Validation(format!(
            "identifier {s:?} contains whitespace or control characters"
        )));
    }
    Ok(())
}

/// One resource: its privileged user set and the forbidden coalitions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceEntry {
    pub id: ResourceId,
    pub privileged: BTreeSet<UserId>,
    pub forbidden: BTreeSet<BTreeSet<UserId>>,
}

/// Whether duplicate privileged memberships across resources are rejected.
/// The storage lower bound is stated for resources with distinct membership,
/// so `Strict` is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MembershipMode {
    #[default]
    Strict,
    /// Duplicate memberships allowed; bound computation deduplicates them.
    Dedup,
}

/// The full access structure: a user set plus an ordered resource list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessStructure {
    users: BTreeSet<UserId>,
    resources: Vec<ResourceEntry>,
    index: BTreeMap<ResourceId, usize>,
    mode: MembershipMode,
}

#[derive(Serialize, Deserialize)]
struct ResourceJson {
    id: String,
    privileged: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forbidden: Option<Vec<Vec<String>>>,
}

#[derive(Serialize, Deserialize)]
struct StructureJson {
    users: Vec<String>,
    resources: Vec<ResourceJson>,
}

impl AccessStructure {
    /// Build and validate a structure. Forbidden sets missing from an entry
    /// are defaulted to the single complement set `users \ privileged`,
    /// which makes the structure ideal by construction.
    pub fn new(
        users: Vec<UserId>,
        resources: Vec<(ResourceId, BTreeSet<UserId>, Option<Vec<BTreeSet<UserId>>>)>,
        mode: MembershipMode,
    ) -> Result<Self> {
        let mut user_set = BTreeSet::new();
        for u in users {
            if !user_set.insert(u.clone()) {
                return Err(Error::Validation(format!("duplicate user id {u}")));
            }
        }
        let mut index = BTreeMap::new();
        let mut entries = Vec::with_capacity(resources.len());
        let mut memberships: BTreeSet<BTreeSet<UserId>> = BTreeSet::new();
        for (id, privileged, forbidden) in resources {
            if index.contains_key(&id) {
                return Err(Error::Validation(format!("duplicate resource id {id}")));
            }
            if privileged.is_empty() {
                return Err(Error::Validation(format!(
                    "resource {id} has an empty privileged set"
                )));
            }
            for u in &privileged {
                if !user_set.contains(u) {
                    return Err(Error::Validation(format!(
                        "resource {id} references unknown user {u}"
                    )));
                }
            }
            if mode == MembershipMode::Strict && !memberships.insert(privileged.clone()) {
                return Err(Error::Validation(format!(
                    "resource {id} duplicates another resource's privileged membership"
                )));
            }
            let forbidden = match forbidden {
                Some(sets) => {
                    let mut out = BTreeSet::new();
                    for set in sets {
                        for u in &set {
                            if !user_set.contains(u) {
                                return Err(Error::Validation(format!(
                                    "forbidden set of resource {id} references unknown user {u}"
                                )));
                            }
                        }
                        out.insert(set);
                    }
                    out
                }
                None => {
                    let complement: BTreeSet<UserId> =
                        user_set.difference(&privileged).cloned().collect();
                    std::iter::once(complement).collect()
                }
            };
            index.insert(id.clone(), entries.len());
            entries.push(ResourceEntry {
                id,
                privileged,
                forbidden,
            });
        }
        Ok(AccessStructure {
            users: user_set,
            resources: entries,
            index,
            mode,
        })
    }

    pub fn users(&self) -> &BTreeSet<UserId> {
        &self.users
    }

    pub fn resources(&self) -> &[ResourceEntry] {
        &self.resources
    }

    pub fn resource(&self, id: &ResourceId) -> Result<&ResourceEntry> {
        self.index
            .get(id)
            .map(|&i| &self.resources[i])
            .ok_or_else(|| Error::Validation(format!("unknown resource {id}")))
    }

    pub fn contains_resource(&self, id: &ResourceId) -> bool {
        self.index.contains_key(id)
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Count of distinct privileged memberships. Equals the resource count
    /// in strict mode.
    pub fn distinct_membership_count(&self) -> usize {
        match self.mode {
            MembershipMode::Strict => self.resources.len(),
            MembershipMode::Dedup => self
                .resources
                .iter()
                .map(|r| &r.privileged)
                .collect::<BTreeSet<_>>()
                .len(),
        }
    }

    pub fn mode(&self) -> MembershipMode {
        self.mode
    }

    /// Ideal: for every resource, the full complement of its privileged set
    /// is a forbidden coalition. An empty complement counts as ideal when
    /// the empty set is listed.
    pub fn is_ideal(&self) -> bool {
        self.resources.iter().all(|r| {
            let complement: BTreeSet<UserId> =
                self.users.difference(&r.privileged).cloned().collect();
            r.forbidden.contains(&complement)
        })
    }

    /// Number of resources the user is privileged for; this is the user's
    /// key storage without any linking.
    pub fn user_degree(&self, u: &UserId) -> Result<usize> {
        if !self.users.contains(u) {
            return Err(Error::Validation(format!("unknown user {u}")));
        }
        Ok(self
            .resources
            .iter()
            .filter(|r| r.privileged.contains(u))
            .count())
    }

    /// Resources the user is entitled to, in resource-list order.
    pub fn entitlement(&self, u: &UserId) -> BTreeSet<ResourceId> {
        self.resources
            .iter()
            .filter(|r| r.privileged.contains(u))
            .map(|r| r.id.clone())
            .collect()
    }

    pub fn parse(bytes: &[u8], mode: MembershipMode) -> Result<Self> {
        let raw: StructureJson =
            serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        let users = raw
            .users
            .into_iter()
            .map(UserId::new)
            .collect::<Result<Vec<_>>>()?;
        let mut resources = Vec::with_capacity(raw.resources.len());
        for r in raw.resources {
            let id = ResourceId::new(r.id)?;
            let mut privileged = BTreeSet::new();
            for u in r.privileged {
                if !privileged.insert(UserId::new(u.clone())?) {
                    return Err(Error::Parse(format!(
                        "duplicate user {u} in privileged set of {id}"
                    )));
                }
            }
            let forbidden = match r.forbidden {
                Some(sets) => {
                    let mut out = Vec::new();
                    for set in sets {
                        let mut parsed = BTreeSet::new();
                        for u in set {
                            if !parsed.insert(UserId::new(u.clone())?) {
                                return Err(Error::Parse(format!(
                                    "duplicate user {u} in a forbidden set of {id}"
                                )));
                            }
                        }
                        out.push(parsed);
                    }
                    Some(out)
                }
                None => None,
            };
            resources.push((id, privileged, forbidden));
        }
        AccessStructure::new(users, resources, mode)
    }

    pub fn to_json(&self) -> String {
        let raw = StructureJson {
            users: self.users.iter().map(|u| u.0.clone()).collect(),
            resources: self
                .resources
                .iter()
                .map(|r| ResourceJson {
                    id: r.id.0.clone(),
                    privileged: r.privileged.iter().map(|u| u.0.clone()).collect(),
                    forbidden: Some(
                        r.forbidden
                            .iter()
                            .map(|set| set.iter().map(|u| u.0.clone()).collect())
                            .collect(),
                    ),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("structure serializes")
    }
}
