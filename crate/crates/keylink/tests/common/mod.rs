// shared across test targets; each one uses a different subset
#![allow(dead_code)]

use keylink::access::{AccessStructure, MembershipMode};
use keylink::kps::KeyingRelationshipGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn parse(json: &str) -> AccessStructure {
    AccessStructure::parse(json.as_bytes(), MembershipMode::Strict).unwrap()
}

/// Complete secure-group structure on 4 users: all 11 subsets of size >= 2.
pub fn complete_4user_structure() -> AccessStructure {
    let users = ["u1", "u2", "u3", "u4"];
    let mut resources = Vec::new();
    for mask in 1u32..16 {
        let members: Vec<&str> = (0..4)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| users[i])
            .collect();
        if members.len() >= 2 {
            resources.push(serde_json::json!({
                "id": format!("g{mask:02}"),
                "privileged": members,
            }));
        }
    }
    parse(&serde_json::json!({"users": users, "resources": resources}).to_string())
}

/// 8 users, 5 resources, max unlinked storage 3: u1 sits in three pairwise
/// incomparable memberships so no linking can relieve it, while r4 < r5
/// leaves one link available elsewhere.
pub fn irregular_8user_5res() -> AccessStructure {
    parse(
        r#"{"users":["u1","u2","u3","u4","u5","u6","u7","u8"],"resources":[
            {"id":"r1","privileged":["u1","u2"]},
            {"id":"r2","privileged":["u1","u3"]},
            {"id":"r3","privileged":["u1","u4"]},
            {"id":"r4","privileged":["u2","u5"]},
            {"id":"r5","privileged":["u2","u5","u6"]}]}"#,
    )
}

pub fn cycle_graph(n: usize) -> KeyingRelationshipGraph {
    circulant_graph(n, &[1])
}

pub fn complete_graph(n: usize) -> KeyingRelationshipGraph {
    let mut g = KeyingRelationshipGraph::new();
    for i in 0..n {
        for j in (i + 1)..n {
            g.add_edge(format!("v{i}"), format!("v{j}")).unwrap();
        }
    }
    g
}

pub fn circulant_graph(n: usize, offsets: &[usize]) -> KeyingRelationshipGraph {
    let mut g = KeyingRelationshipGraph::new();
    for i in 0..n {
        for &d in offsets {
            g.add_edge(format!("v{i}"), format!("v{}", (i + d) % n)).unwrap();
        }
    }
    g
}

/// Seeded 4-regular simple connected graph on 8 nodes: start from the
/// circulant C8(1,2) and apply random degree-preserving 2-opt edge swaps.
pub fn random_4regular_8node(rng: &mut impl Rng) -> KeyingRelationshipGraph {
    let mut g = circulant_graph(8, &[1, 2]);
    let mut swaps = 0;
    let mut attempts = 0;
    while swaps < 20 && attempts < 2000 {
        attempts += 1;
        let edges: Vec<(String, String)> = g.edges().iter().cloned().collect();
        let (a, b) = edges.choose(rng).unwrap().clone();
        let (c, d) = edges.choose(rng).unwrap().clone();
        let four = [&a, &b, &c, &d];
        if four.iter().collect::<std::collections::BTreeSet<_>>().len() != 4 {
            continue;
        }
        if g.has_edge(&a, &c) || g.has_edge(&b, &d) {
            continue;
        }
        let mut next = KeyingRelationshipGraph::new();
        for (x, y) in g.edges() {
            if (x, y) == (&a, &b) || (x, y) == (&c, &d) {
                continue;
            }
            next.add_edge(x.clone(), y.clone()).unwrap();
        }
        next.add_edge(a.clone(), c.clone()).unwrap();
        next.add_edge(b.clone(), d.clone()).unwrap();
        if next.is_connected_ignoring_isolated() {
            g = next;
            swaps += 1;
        }
    }
    assert!(g.degrees().values().all(|&d| d == 4));
    g
}

/// Seeded connected random graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: usize) -> KeyingRelationshipGraph {
    let mut g = KeyingRelationshipGraph::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        g.add_edge(format!("v{i}"), format!("v{j}")).unwrap();
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < extra * 20 {
        attempts += 1;
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j && !g.has_edge(&format!("v{i}"), &format!("v{j}")) {
            g.add_edge(format!("v{i}"), format!("v{j}")).unwrap();
            added += 1;
        }
    }
    g
}
