//! Seeded synthetic call graphs for tests, benchmarks and table-shaped demos.

use crate::error::{Error, Result};
use crate::graph::{CallGraph, FunctionKey, GraphBuilder, NodeFlags};
use crate::rng::SplitMix64;

fn add_nodes(builder: &mut GraphBuilder, n: usize) {
    for i in 0..n {
        builder
            .add_function(
                FunctionKey::new(format!("synthetic/m{}.py", i / 100), format!("fn_{i}")),
                NodeFlags::default(),
            )
            .expect("generated keys are unique");
    }
}

/// Directed G(n, p): every ordered pair `u != v` is an edge with probability `p`.
pub fn random_digraph(n: usize, p: f64, seed: u64) -> CallGraph {
    let mut rng = SplitMix64::new(seed);
    let mut b = GraphBuilder::new();
    add_nodes(&mut b, n);
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.next_f64() < p {
                b.add_call(u, v, 1.0);
            }
        }
    }
    b.build()
}

/// Directed graph with exactly `n` nodes, `m` edges and `components` weak
/// components, no self-loops or reciprocal duplicates.
///
/// Components 1.. are single nodes or pairs as needed; the first component
/// takes the remaining nodes and all surplus edges.
pub fn shaped_graph(n: usize, m: usize, components: usize, seed: u64) -> Result<CallGraph> {
    if components == 0 && n > 0 || components > n {
        return Err(Error::Domain(format!(
            "cannot split {n} nodes into {components} components"
        )));
    }
    if n == 0 {
        return if m == 0 {
            Ok(CallGraph::default())
        } else {
            Err(Error::Domain("edges without nodes".into()))
        };
    }
    let tree_edges = n - components;
    if m < tree_edges {
        return Err(Error::Domain(format!(
            "{m} edges cannot connect {n} nodes into {components} components"
        )));
    }
    // Small components are pairs; the big one holds the rest.
    let small = components - 1;
    let pairs = small.min(n - small - 1);
    let singles = small - pairs;
    let big = n - 2 * pairs - singles;
    let capacity = big * (big - 1) / 2;
    let surplus = m - tree_edges;
    if big == 0 || (big - 1) + surplus > capacity {
        return Err(Error::Domain("too many edges for the requested shape".into()));
    }

    let mut rng = SplitMix64::new(seed);
    let mut b = GraphBuilder::new();
    add_nodes(&mut b, n);
    let mut seen = std::collections::HashSet::new();
    // Random recursive tree over 0..big.
    for v in 1..big {
        let u = rng.below(v);
        b.add_call(u, v, 1.0);
        seen.insert((u, v));
    }
    let mut added = 0;
    while added < surplus {
        let u = rng.below(big);
        let v = rng.below(big);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            b.add_call(u, v, 1.0);
            added += 1;
        }
    }
    for k in 0..pairs {
        let u = big + 2 * k;
        b.add_call(u, u + 1, 1.0);
    }
    Ok(b.build())
}
