//! Key linking: the storage lower bound, the greedy linking procedure, the
//! exhaustive optimal search, and storage accounting over a link forest.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::access::{AccessStructure, ResourceId, UserId};
use crate::error::{Error, Result};

/// Parent map over resources. A link child<-parent means the child's key is
/// derived from the parent's key, which is safe only when the parent's
/// privileged set is a proper subset of the child's.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkForest {
    parent: BTreeMap<ResourceId, ResourceId>,
}

#[derive(Serialize, Deserialize)]
struct LinkJson {
    child: String,
    parent: String,
}

#[derive(Serialize, Deserialize)]
struct ForestJson {
    links: Vec<LinkJson>,
}

impl LinkForest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parent(&self, r: &ResourceId) -> Option<&ResourceId> {
        self.parent.get(r)
    }

    pub fn links(&self) -> impl Iterator<Item = (&ResourceId, &ResourceId)> {
        self.parent.iter()
    }

    pub fn link_count(&self) -> usize {
        self.parent.len()
    }

    pub fn set_parent(&mut self, child: ResourceId, parent: ResourceId) {
        self.parent.insert(child, parent);
    }

    /// Children of a resource (resources whose key derives from its key).
    pub fn children(&self, r: &ResourceId) -> Vec<&ResourceId> {
        self.parent
            .iter()
            .filter(|(_, p)| *p == r)
            .map(|(c, _)| c)
            .collect()
    }

    /// Check every link against the structure: both endpoints known, the
    /// parent's privileged set a proper subset of the child's, and no cycle.
    pub fn validate(&self, s: &AccessStructure) -> Result<()> {
        for (child, parent) in &self.parent {
            let c = s.resource(child)?;
            let p = s.resource(parent)?;
            if !(p.privileged.is_subset(&c.privileged) && p.privileged != c.privileged) {
                return Err(Error::Validation(format!(
                    "link {child}<-{parent}: parent's privileged set is not a proper subset"
                )));
            }
        }
        // proper-subset links cannot cycle, but a forest may come from a
        // file that fails the subset check only after this loop; walk anyway
        for start in self.parent.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start;
            while let Some(p) = self.parent.get(cur) {
                if !seen.insert(cur.clone()) {
                    return Err(Error::Validation(format!("cycle through {start}")));
                }
                cur = p;
            }
        }
        Ok(())
    }

    /// All resources derivable from the held set: held plus everything
    /// reachable by following parent->child edges. Derivation is
    /// one-directional; holding a child reveals nothing about its parent.
    pub fn derivation_closure(&self, held: &BTreeSet<ResourceId>) -> BTreeSet<ResourceId> {
        let mut children: BTreeMap<&ResourceId, Vec<&ResourceId>> = BTreeMap::new();
        for (c, p) in &self.parent {
            children.entry(p).or_default().push(c);
        }
        let mut closure = held.clone();
        let mut stack: Vec<&ResourceId> = held.iter().collect();
        while let Some(r) = stack.pop() {
            if let Some(kids) = children.get(r) {
                for &k in kids {
                    if closure.insert(k.clone()) {
                        stack.push(k);
                    }
                }
            }
        }
        closure
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let raw: ForestJson =
            serde_json::from_slice(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        let mut forest = LinkForest::new();
        for link in raw.links {
            let child = ResourceId::new(link.child)?;
            let parent = ResourceId::new(link.parent)?;
            if forest.parent.insert(child.clone(), parent).is_some() {
                return Err(Error::Parse(format!("resource {child} has two parents")));
            }
        }
        Ok(forest)
    }

    pub fn to_json(&self) -> String {
        let raw = ForestJson {
            links: self
                .parent
                .iter()
                .map(|(c, p)| LinkJson {
                    child: c.0.clone(),
                    parent: p.0.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("forest serializes")
    }
}

/// Per-user stored-key counts after linking, with the bound for context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StorageReport {
    pub per_user: BTreeMap<String, usize>,
    pub max_storage: usize,
    pub total_stored: usize,
    pub avg_storage: f64,
    pub lower_bound: usize,
    pub total_resources_m: usize,
    pub total_users_n: usize,
}

/// ceil(m/n) with m the distinct-membership resource count.
pub fn lower_bound(s: &AccessStructure) -> usize {
    let m = s.distinct_membership_count();
    let n = s.user_count();
    if m == 0 || n == 0 {
        return 0;
    }
    m.div_ceil(n)
}

/// Resources in canonical processing order: privileged-set size ascending,
/// resource id ascending within equal sizes.
fn sorted_indices(s: &AccessStructure) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.resources().len()).collect();
    idx.sort_by(|&a, &b| {
        let ra = &s.resources()[a];
        let rb = &s.resources()[b];
        ra.privileged
            .len()
            .cmp(&rb.privileged.len())
            .then_with(|| ra.id.cmp(&rb.id))
    });
    idx
}

fn is_proper_subset(a: &BTreeSet<UserId>, b: &BTreeSet<UserId>) -> bool {
    a.len() < b.len() && a.is_subset(b)
}

/// Greedy linking: walk resources from the largest privileged set down; for
/// each, scan smaller resources from nearest to farthest and link to the
/// first whose privileged set is a proper subset. At most one parent each.
pub fn greedy_link(s: &AccessStructure) -> LinkForest {
    let order = sorted_indices(s);
    let mut forest = LinkForest::new();
    for c in (1..order.len()).rev() {
        let cur = &s.resources()[order[c]];
        for p in (0..c).rev() {
            let cand = &s.resources()[order[p]];
            if is_proper_subset(&cand.privileged, &cur.privileged) {
                forest.set_parent(cur.id.clone(), cand.id.clone());
                break;
            }
        }
    }
    forest
}

/// Per-user stored resources under the forest: u stores r iff u is
/// privileged for r and either r is a root or u is outside the parent's
/// privileged set (otherwise u derives r's key instead).
pub fn stored_resources(
    s: &AccessStructure,
    f: &LinkForest,
    u: &UserId,
) -> BTreeSet<ResourceId> {
    s.resources()
        .iter()
        .filter(|r| {
            r.privileged.contains(u)
                && match f.parent(&r.id) {
                    None => true,
                    Some(p) => !s
                        .resource(p)
                        .map(|pe| pe.privileged.contains(u))
                        .unwrap_or(false),
                }
        })
        .map(|r| r.id.clone())
        .collect()
}

pub fn storage_report(s: &AccessStructure, f: &LinkForest) -> Result<StorageReport> {
    f.validate(s)?;
    let mut per_user = BTreeMap::new();
    let mut total = 0usize;
    let mut max = 0usize;
    for u in s.users() {
        let count = stored_resources(s, f, u).len();
        total += count;
        max = max.max(count);
        per_user.insert(u.0.clone(), count);
    }
    let n = s.user_count();
    Ok(StorageReport {
        per_user,
        max_storage: max,
        total_stored: total,
        avg_storage: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        lower_bound: lower_bound(s),
        total_resources_m: s.distinct_membership_count(),
        total_users_n: n,
    })
}

pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Exhaustive search over all valid forests, minimizing max storage. Ties
/// break to the lexicographically smallest parent map (resources in id
/// order, no-parent before any parent, parent ids ascending). Candidates
/// enumerated depth-first in that order, so the first forest found at the
/// optimal value is the answer.
pub fn exhaustive_link(s: &AccessStructure) -> Result<LinkForest> {
    let m = s.resources().len();
    if m > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge(format!(
            "exhaustive search refused for m={m} > {EXHAUSTIVE_LIMIT}"
        )));
    }
    // resources in id order; candidate parents per resource, None first
    let mut ids: Vec<&ResourceId> = s.resources().iter().map(|r| &r.id).collect();
    ids.sort();
    let entries: Vec<_> = ids.iter().map(|id| s.resource(id).unwrap()).collect();
    let candidates: Vec<Vec<Option<&ResourceId>>> = entries
        .iter()
        .map(|r| {
            let mut c: Vec<Option<&ResourceId>> = vec![None];
            for p in &entries {
                if is_proper_subset(&p.privileged, &r.privileged) {
                    c.push(Some(&p.id));
                }
            }
            c
        })
        .collect();

    let users: Vec<&UserId> = s.users().iter().collect();
    let user_idx: BTreeMap<&UserId, usize> = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    // per resource, per candidate: user indices that must store the key
    let storers: Vec<Vec<Vec<usize>>> = entries
        .iter()
        .zip(&candidates)
        .map(|(r, cands)| {
            cands
                .iter()
                .map(|cand| {
                    r.privileged
                        .iter()
                        .filter(|u| match cand {
                            None => true,
                            Some(p) => !s.resource(p).unwrap().privileged.contains(*u),
                        })
                        .map(|u| user_idx[u])
                        .collect()
                })
                .collect()
        })
        .collect();

    struct Search<'a> {
        candidates: &'a [Vec<Option<&'a ResourceId>>],
        storers: &'a [Vec<Vec<usize>>],
        counts: Vec<usize>,
        current_max: usize,
        best: usize,
        choice: Vec<usize>,
        best_choice: Option<Vec<usize>>,
    }

    impl Search<'_> {
        fn go(&mut self, depth: usize) {
            if self.current_max >= self.best {
                return;
            }
            if depth == self.candidates.len() {
                self.best = self.current_max;
                self.best_choice = Some(self.choice.clone());
                return;
            }
            for (ci, _) in self.candidates[depth].iter().enumerate() {
                let saved_max = self.current_max;
                for &u in &self.storers[depth][ci] {
                    self.counts[u] += 1;
                    self.current_max = self.current_max.max(self.counts[u]);
                }
                self.choice.push(ci);
                self.go(depth + 1);
                self.choice.pop();
                for &u in &self.storers[depth][ci] {
                    self.counts[u] -= 1;
                }
                self.current_max = saved_max;
            }
        }
    }

    let mut search = Search {
        candidates: &candidates,
        storers: &storers,
        counts: vec![0; users.len()],
        current_max: 0,
        best: usize::MAX,
        choice: Vec::new(),
        best_choice: None,
    };
    search.go(0);

    let mut forest = LinkForest::new();
    if let Some(choice) = search.best_choice {
        for (i, ci) in choice.into_iter().enumerate() {
            if let Some(p) = candidates[i][ci] {
                forest.set_parent(ids[i].clone(), p.clone());
            }
        }
    }
    Ok(forest)
}
