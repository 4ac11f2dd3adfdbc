//! Degree, closeness and betweenness centrality.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::graph::{CallGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDegree {
    pub in_degree: usize,
    pub out_degree: usize,
    pub total: usize,
}

/// In/out/total degree per node. Self-loops count once in each direction.
///
/// On an undirected graph all three fields hold the undirected degree
/// (a self-loop contributes 2).
pub fn degree_centrality(g: &CallGraph) -> Vec<NodeDegree> {
    g.ids()
        .map(|v| {
            if g.is_directed() {
                let (i, o) = (g.in_degree(v), g.out_degree(v));
                NodeDegree {
                    in_degree: i,
                    out_degree: o,
                    total: i + o,
                }
            } else {
                let d = g.out_degree(v) + usize::from(g.has_self_loop(v));
                NodeDegree {
                    in_degree: d,
                    out_degree: d,
                    total: d,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosenessMode {
    /// Hop distances on the undirected projection.
    #[default]
    Undirected,
    /// Distances from every other node to `v` along call edges.
    In,
    /// Distances from `v` to every other node along call edges.
    Out,
}

impl std::str::FromStr for ClosenessMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "undirected" => Ok(ClosenessMode::Undirected),
            "in" => Ok(ClosenessMode::In),
            "out" => Ok(ClosenessMode::Out),
            other => Err(format!("unknown closeness mode {other:?}")),
        }
    }
}

/// BFS hop distances from `source` following `next`. Unreached nodes are `usize::MAX`.
fn bfs<'a>(n: usize, source: NodeId, next: impl Fn(NodeId) -> &'a [NodeId]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; n];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in next(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Closeness with reachable-set scaling:
/// `CC(v) = ((r-1)/(n-1)) * ((r-1)/S)` where `r - 1` peers are reachable at
/// total hop distance `S`. Isolated nodes and single-node graphs score 0.
pub fn closeness_centrality(g: &CallGraph, mode: ClosenessMode) -> Vec<f64> {
    let n = g.node_count();
    if n <= 1 {
        return vec![0.0; n];
    }
    let projected;
    let graph = if mode == ClosenessMode::Undirected && g.is_directed() {
        projected = g.undirected_projection();
        &projected
    } else {
        g
    };
    (0..n)
        .into_par_iter()
        .map(|v| {
            let dist = match mode {
                ClosenessMode::In => bfs(n, v, |x| graph.in_neighbors(x)),
                _ => bfs(n, v, |x| graph.out_neighbors(x)),
            };
            let (mut reached, mut total) = (0usize, 0usize);
            for (u, &d) in dist.iter().enumerate() {
                if u != v && d != usize::MAX {
                    reached += 1;
                    total += d;
                }
            }
            if total == 0 {
                0.0
            } else {
                let r = reached as f64;
                (r / (n - 1) as f64) * (r / total as f64)
            }
        })
        .collect()
}

// Sources per partial-sum block. Fixed so results do not depend on the
// thread count.
const BLOCK: usize = 32;
// Blocks materialized at once.
const WAVE: usize = 64;

/// Brandes betweenness with hop distances.
///
/// Directed graphs count ordered pairs; undirected graphs count each
/// unordered pair once. With `normalized` the sums are divided by
/// `(n-1)(n-2)` (directed) or `(n-1)(n-2)/2` (undirected); for `n < 3`
/// the normalized result is all zeros.
pub fn betweenness_centrality(g: &CallGraph, normalized: bool) -> Vec<f64> {
    let n = g.node_count();
    let mut total = vec![0.0; n];
    let blocks: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(BLOCK)
        .map(|s| s..(s + BLOCK).min(n))
        .collect();
    for wave in blocks.chunks(WAVE) {
        let partials: Vec<Vec<f64>> = wave
            .par_iter()
            .map(|range| {
                let mut acc = vec![0.0; n];
                let mut scratch = BrandesScratch::new(n);
                for s in range.clone() {
                    scratch.accumulate(g, s, &mut acc);
                }
                acc
            })
            .collect();
        for partial in &partials {
            for (t, p) in total.iter_mut().zip(partial) {
                *t += p;
            }
        }
    }
    if !g.is_directed() {
        total.iter_mut().for_each(|x| *x /= 2.0);
    }
    if normalized {
        if n < 3 {
            return vec![0.0; n];
        }
        let mut scale = ((n - 1) * (n - 2)) as f64;
        if !g.is_directed() {
            scale /= 2.0;
        }
        total.iter_mut().for_each(|x| *x /= scale);
    }
    total
}

struct BrandesScratch {
    sigma: Vec<f64>,
    dist: Vec<usize>,
    delta: Vec<f64>,
    preds: Vec<Vec<NodeId>>,
    order: Vec<NodeId>,
    queue: VecDeque<NodeId>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            sigma: vec![0.0; n],
            dist: vec![usize::MAX; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    fn accumulate(&mut self, g: &CallGraph, s: NodeId, acc: &mut [f64]) {
        for &v in &self.order {
            self.sigma[v] = 0.0;
            self.dist[v] = usize::MAX;
            self.delta[v] = 0.0;
            self.preds[v].clear();
        }
        self.order.clear();

        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &w in g.out_neighbors(v) {
                if self.dist[w] == usize::MAX {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FunctionKey, GraphBuilder, NodeFlags};

    fn digraph(n: usize, edges: &[(usize, usize)]) -> CallGraph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_function(FunctionKey::new("t", format!("{i}")), NodeFlags::default())
                .unwrap();
        }
        for &(s, t) in edges {
            b.add_call(s, t, 1.0);
        }
        b.build()
    }

    #[test]
    fn degrees() {
        let tri = digraph(3, &[(0, 1), (1, 2), (2, 0)]).undirected_projection();
        assert!(degree_centrality(&tri).iter().all(|d| d.total == 2));
        let g = digraph(3, &[(0, 1), (0, 0)]);
        let d = degree_centrality(&g);
        assert_eq!(d[0], NodeDegree { in_degree: 1, out_degree: 2, total: 3 });
        assert_eq!(d[2], NodeDegree { in_degree: 0, out_degree: 0, total: 0 });
        assert_eq!(d.iter().map(|x| x.total).sum::<usize>(), 2 * g.edge_count());
    }

    #[test]
    fn closeness_on_path() {
        let p3 = digraph(3, &[(0, 1), (1, 2)]);
        let c = closeness_centrality(&p3, ClosenessMode::Undirected);
        assert_eq!(c[1], 1.0);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(closeness_centrality(&digraph(1, &[]), ClosenessMode::Undirected), vec![0.0]);
    }

    #[test]
    fn closeness_directed_modes() {
        // 0 -> 1 -> 2: out-closeness of 0 reaches two peers at S = 3.
        let p3 = digraph(3, &[(0, 1), (1, 2)]);
        let out = closeness_centrality(&p3, ClosenessMode::Out);
        assert!((out[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(out[2], 0.0);
        let inn = closeness_centrality(&p3, ClosenessMode::In);
        assert!((inn[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(inn[0], 0.0);
    }

    #[test]
    fn betweenness_anchors() {
        let p3 = digraph(3, &[(0, 1), (1, 2)]).undirected_projection();
        assert_eq!(betweenness_centrality(&p3, false), vec![0.0, 1.0, 0.0]);
        let star = digraph(4, &[(0, 1), (0, 2), (0, 3)]).undirected_projection();
        let bc = betweenness_centrality(&star, false);
        assert_eq!(bc[0], 3.0);
        assert_eq!(&bc[1..], &[0.0, 0.0, 0.0]);
        // Normalized undirected star center: 3 / (3*2/2) = 1.
        assert_eq!(betweenness_centrality(&star, true)[0], 1.0);
    }

    #[test]
    fn betweenness_directed_path() {
        let p3 = digraph(3, &[(0, 1), (1, 2)]);
        assert_eq!(betweenness_centrality(&p3, false), vec![0.0, 1.0, 0.0]);
        assert_eq!(betweenness_centrality(&p3, true), vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn small_graphs_normalize_to_zero() {
        let g = digraph(2, &[(0, 1)]);
        assert_eq!(betweenness_centrality(&g, true), vec![0.0, 0.0]);
    }

    #[test]
    fn split_paths_share_credit() {
        // Diamond 0 -> {1,2} -> 3: each middle node carries half the pair.
        let g = digraph(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert_eq!(betweenness_centrality(&g, false), vec![0.0, 0.5, 0.5, 0.0]);
    }
}
