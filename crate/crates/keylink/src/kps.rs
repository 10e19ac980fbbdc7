//! Sensor-network key pre-distribution built on key linking: star, complete
//! circulant, and bounded-degree Euler-orientation schemes.
//!
//! Each scheme yields two views. The pairwise view has one resource per
//! edge of the keying relationship graph and is what the storage bound is
//! stated over. The auditable view adds one seed resource per seed-holding
//! node and the link forest wiring every edge key to the seed it derives
//! from.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::access::{AccessStructure, MembershipMode, ResourceId, UserId};
use crate::error::{Error, Result};
use crate::kdf::{derive_key, resource_key, KeyMaterial, PrfContract};
use crate::linker::LinkForest;

/// Logical trust graph: an edge means the two nodes share a pairwise key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyingRelationshipGraph {
    nodes: BTreeSet<String>,
    edges: BTreeSet<(String, String)>, // stored as (min, max)
}

impl KeyingRelationshipGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: impl Into<String>) {
        self.nodes.insert(id.into());
    }

    pub fn add_edge(&mut self, a: impl Into<String>, b: impl Into<String>) -> Result<()> {
        let (a, b) = (a.into(), b.into());
        if a == b {
            return Err(Error::Graph(format!("self-loop at {a}")));
        }
        let e = if a < b { (a, b) } else { (b, a) };
        self.nodes.insert(e.0.clone());
        self.nodes.insert(e.1.clone());
        if !self.edges.insert(e.clone()) {
            return Err(Error::Graph(format!("parallel edge {}-{}", e.0, e.1)));
        }
        Ok(())
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let e = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.edges.contains(&e)
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn degree(&self, v: &str) -> usize {
        self.edges
            .iter()
            .filter(|(a, b)| a == v || b == v)
            .count()
    }

    pub fn degrees(&self) -> BTreeMap<&str, usize> {
        let mut d: BTreeMap<&str, usize> =
            self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for (a, b) in &self.edges {
            *d.get_mut(a.as_str()).unwrap() += 1;
            *d.get_mut(b.as_str()).unwrap() += 1;
        }
        d
    }

    /// Connected when every non-isolated node is reachable from every other.
    pub fn is_connected_ignoring_isolated(&self) -> bool {
        let active: BTreeSet<&str> = self
            .edges
            .iter()
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
            .collect();
        let Some(&start) = active.iter().next() else {
            return true;
        };
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (a, b) in &self.edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &u in adj.get(v).into_iter().flatten() {
                if seen.insert(u) {
                    stack.push(u);
                }
            }
        }
        seen.len() == active.len()
    }

    /// Edge-list text: one `u v` pair per line, `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut g = KeyingRelationshipGraph::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: expected `u v`, got {line:?}",
                        lineno + 1
                    )))
                }
            };
            g.add_edge(a, b)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(g)
    }
}

/// Euler circuit of a graph plus the edge orientation it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EulerOrientation {
    pub directed_edges: BTreeSet<(String, String)>,
    pub circuit: Vec<(String, String)>,
}

impl EulerOrientation {
    /// Validity: every undirected edge used once, consecutive edges chain,
    /// the walk closes, and in-degree equals out-degree everywhere.
    pub fn validate(&self, g: &KeyingRelationshipGraph) -> Result<()> {
        if self.circuit.len() != g.edges().len() {
            return Err(Error::Graph(format!(
                "circuit has {} edges, graph has {}",
                self.circuit.len(),
                g.edges().len()
            )));
        }
        let mut used = BTreeSet::new();
        for (a, b) in &self.circuit {
            if !g.has_edge(a, b) {
                return Err(Error::Graph(format!("circuit edge {a}->{b} not in graph")));
            }
            let key = if a < b { (a, b) } else { (b, a) };
            if !used.insert(key) {
                return Err(Error::Graph(format!("edge {a}-{b} used twice")));
            }
        }
        for pair in self.circuit.windows(2) {
            if pair[0].1 != pair[1].0 {
                return Err(Error::Graph("circuit is not a walk".into()));
            }
        }
        if let (Some(first), Some(last)) = (self.circuit.first(), self.circuit.last()) {
            if last.1 != first.0 {
                return Err(Error::Graph("circuit does not close".into()));
            }
        }
        let mut in_deg: BTreeMap<&str, usize> = BTreeMap::new();
        let mut out_deg: BTreeMap<&str, usize> = BTreeMap::new();
        for (a, b) in &self.directed_edges {
            *out_deg.entry(a).or_default() += 1;
            *in_deg.entry(b).or_default() += 1;
        }
        for (v, deg) in g.degrees() {
            if deg == 0 {
                continue;
            }
            let i = in_deg.get(v).copied().unwrap_or(0);
            let o = out_deg.get(v).copied().unwrap_or(0);
            if i != o || i + o != deg {
                return Err(Error::Graph(format!(
                    "node {v}: in={i} out={o} degree={deg}"
                )));
            }
        }
        Ok(())
    }
}

/// Pair odd-degree vertices (lexicographic order, skipping pairs already
/// adjacent) and add one edge per pair so every degree becomes even.
pub fn make_eulerian(g: &KeyingRelationshipGraph) -> Result<KeyingRelationshipGraph> {
    if !g.is_connected_ignoring_isolated() {
        return Err(Error::Graph("graph is disconnected".into()));
    }
    let mut out = g.clone();
    let mut odd: Vec<String> = g
        .degrees()
        .into_iter()
        .filter(|&(_, d)| d % 2 == 1)
        .map(|(v, _)| v.to_string())
        .collect();
    while !odd.is_empty() {
        let u = odd.remove(0);
        let partner = odd.iter().position(|v| !out.has_edge(&u, v));
        match partner {
            Some(i) => {
                let v = odd.remove(i);
                out.add_edge(u, v)?;
            }
            None => {
                return Err(Error::Graph(format!(
                    "cannot even out degrees with simple edges: {u} is already \
adjacent to every remaining odd-degree vertex"
                )))
            }
        }
    }
    Ok(out)
}

/// Hierholzer's stack-based circuit construction. Requires all degrees
/// even and the non-isolated part connected.
pub fn euler_circuit(g: &KeyingRelationshipGraph) -> Result<EulerOrientation> {
    for (v, d) in g.degrees() {
        if d % 2 == 1 {
            return Err(Error::Graph(format!("node {v} has odd degree {d}")));
        }
    }
    if !g.is_connected_ignoring_isolated() {
        return Err(Error::Graph("graph is disconnected".into()));
    }
    if g.edges().is_empty() {
        return Ok(EulerOrientation {
            directed_edges: BTreeSet::new(),
            circuit: Vec::new(),
        });
    }
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (a, b) in g.edges() {
        adj.entry(a).or_default().insert(b);
        adj.entry(b).or_default().insert(a);
    }
    let start = *adj.keys().next().unwrap();
    let mut stack = vec![start];
    let mut walk = Vec::new();
    while let Some(&v) = stack.last() {
        let next = adj.get(v).and_then(|s| s.iter().next().copied());
        match next {
            Some(u) => {
                adj.get_mut(v).unwrap().remove(u);
                adj.get_mut(u).unwrap().remove(v);
                stack.push(u);
            }
            None => walk.push(stack.pop().unwrap()),
        }
    }
    walk.reverse();
    let circuit: Vec<(String, String)> = walk
        .windows(2)
        .map(|p| (p[0].to_string(), p[1].to_string()))
        .collect();
    if circuit.len() != g.edges().len() {
        return Err(Error::Graph("not all edges reachable from start".into()));
    }
    let directed_edges: BTreeSet<(String, String)> = circuit.iter().cloned().collect();
    let orientation = EulerOrientation {
        directed_edges,
        circuit,
    };
    orientation.validate(g)?;
    Ok(orientation)
}

fn seed_resource_id(node: &str) -> ResourceId {
    ResourceId::new(format!("node:{node}")).expect("valid id")
}

/// Canonical edge resource label; both endpoints derive the same PRF input
/// because direction lives in the parent (seed) label, not here.
pub fn edge_resource_id(a: &str, b: &str) -> ResourceId {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ResourceId::new(format!("pair:{lo}:{hi}")).expect("valid id")
}

/// Per-node key plan plus the auditable structure and forest behind it.
#[derive(Debug, Clone, Serialize)]
pub struct KpsPlan {
    pub nodes: BTreeMap<String, NodePlan>,
    pub max_storage: usize,
    #[serde(skip)]
    pub full_structure: AccessStructure,
    #[serde(skip)]
    pub forest: LinkForest,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodePlan {
    /// Seed resource held by this node, if it holds one.
    pub seed: Option<ResourceId>,
    /// Edge keys stored directly (incoming edges).
    pub stored: Vec<ResourceId>,
    /// Edge keys derivable from the seed (outgoing edges).
    pub derivable: Vec<ResourceId>,
    pub storage: usize,
}

impl KpsPlan {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct PlanJson<'a> {
            nodes: &'a BTreeMap<String, NodePlan>,
            max_storage: usize,
            links: Vec<serde_json::Value>,
        }
        let links = self
            .forest
            .links()
            .map(|(c, p)| serde_json::json!({"child": c.as_str(), "parent": p.as_str()}))
            .collect();
        serde_json::to_string_pretty(&PlanJson {
            nodes: &self.nodes,
            max_storage: self.max_storage,
            links,
        })
        .expect("plan serializes")
    }

    /// Everything a node holds: its seed resource plus its stored edge keys.
    pub fn node_material(&self, node: &str) -> BTreeSet<ResourceId> {
        let mut held = BTreeSet::new();
        if let Some(plan) = self.nodes.get(node) {
            if let Some(seed) = &plan.seed {
                held.insert(seed.clone());
            }
            held.extend(plan.stored.iter().cloned());
        }
        held
    }

    /// Random seed keys for every root of the plan's forest.
    pub fn generate_seeds(
        &self,
        rng: &mut impl rand::Rng,
    ) -> BTreeMap<ResourceId, KeyMaterial> {
        let mut seeds = BTreeMap::new();
        for r in self.full_structure.resources() {
            if self.forest.parent(&r.id).is_none() {
                let mut bytes = vec![0u8; crate::kdf::KEY_LEN];
                rng.fill_bytes(&mut bytes);
                seeds.insert(r.id.clone(), KeyMaterial::new(bytes).unwrap());
            }
        }
        seeds
    }

    /// Compute every edge key two ways: the tail node derives it from its
    /// seed in one PRF step, the head node holds the provisioned key from
    /// the forest. Returns (edge resource, tail-derived, provisioned).
    pub fn pairwise_keys(
        &self,
        seeds: &BTreeMap<ResourceId, KeyMaterial>,
        f: &dyn PrfContract,
    ) -> Result<Vec<(ResourceId, KeyMaterial, KeyMaterial)>> {
        let mut out = Vec::new();
        for r in self.full_structure.resources() {
            let Some(parent) = self.forest.parent(&r.id) else {
                continue;
            };
            let tail_seed = seeds
                .get(parent)
                .ok_or_else(|| Error::Kdf(format!("missing seed {parent}")))?;
            let via_tail = derive_key(tail_seed, parent, &r.id, f)?;
            let provisioned = resource_key(&self.forest, seeds, &r.id, f)?;
            out.push((r.id.clone(), via_tail, provisioned));
        }
        Ok(out)
    }
}

struct PlanBuilder {
    users: Vec<UserId>,
    pair_resources: Vec<(ResourceId, BTreeSet<UserId>)>,
    full_resources: Vec<(ResourceId, BTreeSet<UserId>)>,
    forest: LinkForest,
    nodes: BTreeMap<String, NodePlan>,
}

impl PlanBuilder {
    fn new(node_ids: &BTreeSet<String>) -> Result<Self> {
        let users = node_ids
            .iter()
            .map(|n| UserId::new(n.clone()))
            .collect::<Result<Vec<_>>>()?;
        let nodes = node_ids
            .iter()
            .map(|n| {
                (
                    n.clone(),
                    NodePlan {
                        seed: None,
                        stored: Vec::new(),
                        derivable: Vec::new(),
                        storage: 0,
                    },
                )
            })
            .collect();
        Ok(PlanBuilder {
            users,
            pair_resources: Vec::new(),
            full_resources: Vec::new(),
            forest: LinkForest::new(),
            nodes,
        })
    }

    fn give_seed(&mut self, node: &str) -> ResourceId {
        let id = seed_resource_id(node);
        self.full_resources.push((
            id.clone(),
            std::iter::once(UserId::new(node).unwrap()).collect(),
        ));
        let plan = self.nodes.get_mut(node).unwrap();
        plan.seed = Some(id.clone());
        id
    }

    /// Oriented edge tail->head: the edge key derives from the tail's seed,
    /// the head stores it.
    fn add_oriented_edge(&mut self, tail: &str, head: &str) {
        let edge = edge_resource_id(tail, head);
        let privileged: BTreeSet<UserId> = [UserId::new(tail).unwrap(), UserId::new(head).unwrap()]
            .into_iter()
            .collect();
        self.pair_resources.push((edge.clone(), privileged.clone()));
        self.full_resources.push((edge.clone(), privileged));
        self.forest
            .set_parent(edge.clone(), seed_resource_id(tail));
        self.nodes.get_mut(tail).unwrap().derivable.push(edge.clone());
        self.nodes.get_mut(head).unwrap().stored.push(edge);
    }

    fn finish(mut self) -> Result<(AccessStructure, KpsPlan)> {
        let pairwise = AccessStructure::new(
            self.users.clone(),
            self.pair_resources
                .into_iter()
                .map(|(id, p)| (id, p, None))
                .collect(),
            MembershipMode::Strict,
        )?;
        let full = AccessStructure::new(
            self.users,
            self.full_resources
                .into_iter()
                .map(|(id, p)| (id, p, None))
                .collect(),
            MembershipMode::Strict,
        )?;
        self.forest.validate(&full)?;
        let mut max_storage = 0;
        for plan in self.nodes.values_mut() {
            plan.storage = plan.stored.len() + usize::from(plan.seed.is_some());
            max_storage = max_storage.max(plan.storage);
        }
        Ok((
            pairwise,
            KpsPlan {
                nodes: self.nodes,
                max_storage,
                full_structure: full,
                forest: self.forest,
            },
        ))
    }
}

fn node_label(i: usize, n: usize) -> String {
    let width = (n.max(2) - 1).to_string().len();
    format!("{i:0width$}")
}

/// Star scheme: a base station holds one master seed and derives each
/// base-sensor pairwise key from it; every sensor stores its one key.
pub fn build_star(n: usize) -> Result<(AccessStructure, KpsPlan)> {
    if n == 0 {
        return Err(Error::Validation("star needs at least one sensor".into()));
    }
    let mut node_ids = BTreeSet::from(["base".to_string()]);
    let sensors: Vec<String> = (0..n).map(|i| format!("s{}", node_label(i, n))).collect();
    node_ids.extend(sensors.iter().cloned());
    let mut b = PlanBuilder::new(&node_ids)?;
    b.give_seed("base");
    for s in &sensors {
        b.add_oriented_edge("base", s);
    }
    b.finish()
}

/// Complete-graph scheme for odd n: node i keeps its own seed, stores the
/// derived keys for the (n-1)/2 nodes in front of it, and derives the keys
/// for the (n-1)/2 nodes behind it.
pub fn build_complete_circulant(n: usize) -> Result<(AccessStructure, KpsPlan)> {
    if n < 3 {
        return Err(Error::Validation("complete scheme needs n >= 3".into()));
    }
    if n % 2 == 0 {
        return Err(Error::Validation(
            "complete scheme needs odd n; use the bounded extension for even n".into(),
        ));
    }
    let labels: Vec<String> = (0..n).map(|i| node_label(i, n)).collect();
    let node_ids: BTreeSet<String> = labels.iter().cloned().collect();
    let mut b = PlanBuilder::new(&node_ids)?;
    for l in &labels {
        b.give_seed(l);
    }
    for i in 0..n {
        for d in 1..=(n - 1) / 2 {
            let j = (i + d) % n;
            b.add_oriented_edge(&labels[i], &labels[j]);
        }
    }
    b.finish()
}

/// Bounded-degree scheme: orient the keying relationship graph along an
/// Euler circuit; each node stores its seed plus one key per incoming edge
/// and derives the outgoing half from the seed.
pub fn build_bounded(
    g: &KeyingRelationshipGraph,
) -> Result<(AccessStructure, KpsPlan, EulerOrientation)> {
    let orientation = euler_circuit(g)?;
    let mut b = PlanBuilder::new(g.nodes())?;
    for n in g.nodes() {
        b.give_seed(n);
    }
    for (tail, head) in &orientation.directed_edges {
        b.add_oriented_edge(tail, head);
    }
    let (pairwise, plan) = b.finish()?;
    Ok((pairwise, plan, orientation))
}

/// Even-n complete graphs fall outside the circulant split; route through
/// the bounded scheme after evening out degrees. Fails when no simple
/// pairing edge can be added, which is the case for any complete graph.
pub fn build_complete_extended(
    n: usize,
) -> Result<(AccessStructure, KpsPlan, EulerOrientation)> {
    if n < 3 {
        return Err(Error::Validation("complete scheme needs n >= 3".into()));
    }
    let labels: Vec<String> = (0..n).map(|i| node_label(i, n)).collect();
    let mut g = KeyingRelationshipGraph::new();
    for i in 0..n {
        for j in (i + 1)..n {
            g.add_edge(labels[i].clone(), labels[j].clone())?;
        }
    }
    let g = make_eulerian(&g)?;
    build_bounded(&g)
}
