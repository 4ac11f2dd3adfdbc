//! Structural metrics: clustering, components, assortativity, cyclomatic
//! complexity, density and feature norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CallGraph, NodeId};

fn projection(g: &CallGraph) -> std::borrow::Cow<'_, CallGraph> {
    if g.is_directed() {
        std::borrow::Cow::Owned(g.undirected_projection())
    } else {
        std::borrow::Cow::Borrowed(g)
    }
}

/// Undirected neighbor lists with self-loops removed, ascending.
fn simple_neighbors(g: &CallGraph) -> Vec<Vec<NodeId>> {
    let p = projection(g);
    p.ids()
        .map(|v| p.out_neighbors(v).iter().copied().filter(|&w| w != v).collect())
        .collect()
}

fn sorted_intersection_len(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub local: Vec<f64>,
    pub average: f64,
}

/// Local clustering `2 t_i / (k_i (k_i - 1))` on the undirected projection
/// without self-loops, and its mean over all nodes.
pub fn clustering_coefficients(g: &CallGraph) -> Clustering {
    let adj = simple_neighbors(g);
    let local: Vec<f64> = adj
        .iter()
        .map(|nbrs| {
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let twice_t: usize = nbrs
                .iter()
                .map(|&j| sorted_intersection_len(nbrs, &adj[j]))
                .sum();
            // Each triangle edge is seen from both ends.
            twice_t as f64 / (k * (k - 1)) as f64
        })
        .collect();
    let average = mean(&local);
    Clustering { local, average }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Weak,
    Strong,
}

/// Components as ascending id lists, ordered by their smallest member.
pub fn connected_components(g: &CallGraph, kind: ComponentKind) -> Vec<Vec<NodeId>> {
    let mut comps = match kind {
        ComponentKind::Weak => weak_components(g),
        ComponentKind::Strong if !g.is_directed() => weak_components(g),
        ComponentKind::Strong => strong_components(g),
    };
    for c in &mut comps {
        c.sort_unstable();
    }
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

pub fn weak_component_count(g: &CallGraph) -> usize {
    weak_components(g).len()
}

fn weak_components(g: &CallGraph) -> Vec<Vec<NodeId>> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        stack.push(root);
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in g.out_neighbors(v).iter().chain(g.in_neighbors(v)) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Iterative Tarjan.
fn strong_components(g: &CallGraph) -> Vec<Vec<NodeId>> {
    let n = g.node_count();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0;
    // (node, position in its successor list)
    let mut call: Vec<(NodeId, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let succ = g.out_neighbors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack holds v");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Newman's degree assortativity on the undirected projection, self-loops
/// excluded. `None` when there are no edges or the remaining-degree
/// distribution has zero variance.
///
/// With `T` edge ends, `S1 = Σ k`, `S2 = Σ k²` over ends and `Sjk = Σ j·k`
/// over ordered end pairs, `r = (T·Sjk − S1²) / (T·S2 − S1²)`, which is
/// `Σ jk (e_jk − q_j q_k) / σ_q²` with the common factor `1/T²` cancelled.
/// All sums are exact integers; only the final division rounds.
pub fn degree_assortativity(g: &CallGraph) -> Option<f64> {
    let adj = simple_neighbors(g);
    let mut ends: i128 = 0;
    let (mut s1, mut s2, mut sjk): (i128, i128, i128) = (0, 0, 0);
    for (u, nbrs) in adj.iter().enumerate() {
        // Remaining degree: edges other than the one being followed.
        let j = adj[u].len() as i128 - 1;
        for &v in nbrs {
            let k = adj[v].len() as i128 - 1;
            ends += 1;
            s1 += j;
            s2 += j * j;
            sjk += j * k;
        }
    }
    if ends == 0 {
        return None;
    }
    let var = ends * s2 - s1 * s1;
    if var == 0 {
        return None;
    }
    Some((ends * sjk - s1 * s1) as f64 / var as f64)
}

/// `V(G) = E − N + 2P` with `P` the weak component count.
pub fn cyclomatic_complexity(g: &CallGraph) -> i64 {
    cyclomatic_from_counts(g.edge_count(), g.node_count(), weak_component_count(g))
}

pub fn cyclomatic_from_counts(edges: usize, nodes: usize, components: usize) -> i64 {
    edges as i64 - nodes as i64 + 2 * components as i64
}

/// `2m / (n(n−1))`; 0 for fewer than two nodes.
pub fn density(g: &CallGraph) -> f64 {
    density_from_counts(g.node_count(), g.edge_count())
}

pub fn density_from_counts(nodes: usize, edges: usize) -> f64 {
    if nodes < 2 {
        0.0
    } else {
        2.0 * edges as f64 / (nodes as f64 * (nodes as f64 - 1.0))
    }
}

pub fn average_degree_from_counts(nodes: usize, edges: usize) -> f64 {
    if nodes == 0 {
        0.0
    } else {
        2.0 * edges as f64 / nodes as f64
    }
}

/// Euclidean norm of each feature row.
pub fn feature_norms(features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = features.first() else {
        return Ok(Vec::new());
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::Domain("feature vectors must have at least one entry".into()));
    }
    features
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim {
                Err(Error::Domain(format!(
                    "feature row {i} has dimension {}, expected {dim}",
                    row.len()
                )))
            } else {
                Ok(row.iter().map(|x| x * x).sum::<f64>().sqrt())
            }
        })
        .collect()
}
