//! Function-level call graph.
//!
//! A [`CallGraph`] is built once through [`GraphBuilder`] and is immutable
//! afterwards apart from crate-internal flag updates made by the upgrade
//! diff. Node ids are dense (`0..n`) and follow insertion order; adjacency
//! lists are sorted by ascending id so that every traversal is
//! deterministic.

mod io;

pub use io::{import_codeql_edges, load_graph, save_graph, SCHEMA};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Path given to call targets that are not defined in the analyzed tree.
pub const EXTERNAL_PATH: &str = "<external>";

/// Identity of a function across versions: source path plus qualified name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FunctionKey {
    pub path: String,
    pub name: String,
}

impl FunctionKey {
    pub fn new(path: impl Into<String>, name: impl Into<String>) -> Self {
        FunctionKey {
            path: path.into(),
            name: name.into(),
        }
    }
}

impl std::fmt::Display for FunctionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}::{}", self.path, self.name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Roles {
    pub caller: bool,
    pub callee: bool,
}

/// Per-function flags carried by the interchange format.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeFlags {
    pub changed: bool,
    pub vulnerable: bool,
    pub critical: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionNode {
    pub id: NodeId,
    pub key: FunctionKey,
    pub flags: NodeFlags,
    /// Derived from edge direction when the graph is built.
    pub roles: Roles,
}

impl FunctionNode {
    pub fn is_external(&self) -> bool {
        self.key.path == EXTERNAL_PATH
    }

    pub fn path(&self) -> &str {
        &self.key.path
    }

    pub fn name(&self) -> &str {
        &self.key.name
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub weight: f64,
}

/// Directed caller -> callee graph, or its undirected projection.
#[derive(Debug, Clone)]
pub struct CallGraph {
    nodes: Vec<FunctionNode>,
    edges: Vec<CallEdge>,
    directed: bool,
    index: HashMap<FunctionKey, NodeId>,
    edge_index: HashMap<(NodeId, NodeId), usize>,
    out_adj: Vec<Vec<NodeId>>,
    in_adj: Vec<Vec<NodeId>>,
}

impl PartialEq for CallGraph {
    fn eq(&self, other: &Self) -> bool {
        self.directed == other.directed && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Default for CallGraph {
    fn default() -> Self {
        GraphBuilder::new().build()
    }
}

impl CallGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[FunctionNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &FunctionNode {
        &self.nodes[id]
    }

    pub fn edges(&self) -> &[CallEdge] {
        &self.edges
    }

    pub fn find(&self, key: &FunctionKey) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    pub fn lookup(&self, path: &str, name: &str) -> Option<NodeId> {
        self.find(&FunctionKey::new(path, name))
    }

    pub fn edge(&self, source: NodeId, target: NodeId) -> Option<&CallEdge> {
        let key = if self.directed {
            (source, target)
        } else {
            (source.min(target), source.max(target))
        };
        self.edge_index.get(&key).map(|&i| &self.edges[i])
    }

    pub fn has_edge(&self, source: NodeId, target: NodeId) -> bool {
        self.edge(source, target).is_some()
    }

    /// Successors in ascending id order. For an undirected graph this is the
    /// full neighbor set (a self-loop lists the node once).
    pub fn out_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.out_adj[id]
    }

    /// Predecessors in ascending id order; equals `out_neighbors` when undirected.
    pub fn in_neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.in_adj[id]
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.out_adj[id].len()
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.in_adj[id].len()
    }

    pub fn has_self_loop(&self, id: NodeId) -> bool {
        self.edge_index.contains_key(&(id, id))
    }

    pub fn self_loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.source == e.target).count()
    }

    pub fn ids(&self) -> std::ops::Range<NodeId> {
        0..self.nodes.len()
    }

    pub(crate) fn flags_mut(&mut self, id: NodeId) -> &mut NodeFlags {
        &mut self.nodes[id].flags
    }

    /// Subgraph on `keep`, with every edge whose endpoints are both kept.
    ///
    /// Node ids of the result are re-densified in ascending order of the
    /// original ids; attributes are copied unchanged.
    pub fn induced_subgraph(&self, keep: &BTreeSet<NodeId>) -> Result<CallGraph> {
        if let Some(bad) = keep.iter().find(|&&id| id >= self.nodes.len()) {
            return Err(Error::Domain(format!(
                "node id {bad} is not in the graph (n = {})",
                self.nodes.len()
            )));
        }
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut builder = GraphBuilder::with_direction(self.directed);
        for &old in keep {
            let node = &self.nodes[old];
            remap[old] = builder.add_function(node.key.clone(), node.flags)?;
        }
        for e in &self.edges {
            let (s, t) = (remap[e.source], remap[e.target]);
            if s != usize::MAX && t != usize::MAX {
                builder.add_call(s, t, e.weight);
            }
        }
        Ok(builder.build())
    }

    /// Undirected view: one edge per unordered endpoint pair, reciprocal
    /// calls merged with summed weight. Applying it twice is a no-op.
    pub fn undirected_projection(&self) -> CallGraph {
        if !self.directed {
            return self.clone();
        }
        let mut pairs: Vec<((NodeId, NodeId), f64)> = Vec::with_capacity(self.edges.len());
        let mut seen: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        for e in &self.edges {
            let key = (e.source.min(e.target), e.source.max(e.target));
            match seen.get(&key) {
                Some(&i) => pairs[i].1 += e.weight,
                None => {
                    seen.insert(key, pairs.len());
                    pairs.push((key, e.weight));
                }
            }
        }
        pairs.sort_by_key(|&(k, _)| k);
        let mut builder = GraphBuilder::with_direction(false);
        for node in &self.nodes {
            builder
                .add_function(node.key.clone(), node.flags)
                .expect("source graph keys are unique");
        }
        for ((u, v), w) in pairs {
            builder.add_call(u, v, w);
        }
        builder.build()
    }
}

/// Accumulates functions and calls, then freezes them into a [`CallGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    directed: bool,
    nodes: Vec<(FunctionKey, NodeFlags)>,
    index: HashMap<FunctionKey, NodeId>,
    edges: Vec<CallEdge>,
    edge_index: HashMap<(NodeId, NodeId), usize>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::with_direction(true)
    }

    fn with_direction(directed: bool) -> Self {
        GraphBuilder {
            directed,
            ..Default::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn find(&self, key: &FunctionKey) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    /// Adds a new function; a repeated `(path, name)` is an integrity error.
    pub fn add_function(&mut self, key: FunctionKey, flags: NodeFlags) -> Result<NodeId> {
        if self.index.contains_key(&key) {
            return Err(Error::Integrity(format!("duplicate function {key}")));
        }
        if flags.critical && !flags.changed {
            return Err(Error::Integrity(format!(
                "function {key} is critical but not changed"
            )));
        }
        let id = self.nodes.len();
        self.index.insert(key.clone(), id);
        self.nodes.push((key, flags));
        Ok(id)
    }

    /// Returns the id of `key`, inserting an unflagged node if absent.
    pub fn ensure_function(&mut self, key: FunctionKey) -> NodeId {
        match self.index.get(&key) {
            Some(&id) => id,
            None => self
                .add_function(key, NodeFlags::default())
                .expect("absent key cannot collide"),
        }
    }

    /// Adds a call; repeated `(source, target)` pairs accumulate weight.
    ///
    /// Panics if either endpoint is unknown or the weight is not positive.
    pub fn add_call(&mut self, source: NodeId, target: NodeId, weight: f64) {
        assert!(source < self.nodes.len() && target < self.nodes.len());
        assert!(weight > 0.0 && weight.is_finite(), "edge weight must be positive");
        let key = if self.directed {
            (source, target)
        } else {
            (source.min(target), source.max(target))
        };
        match self.edge_index.get(&key) {
            Some(&i) => self.edges[i].weight += weight,
            None => {
                self.edge_index.insert(key, self.edges.len());
                self.edges.push(CallEdge {
                    source: key.0,
                    target: key.1,
                    weight,
                });
            }
        }
    }

    pub fn build(self) -> CallGraph {
        let n = self.nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for e in &self.edges {
            out_adj[e.source].push(e.target);
            in_adj[e.target].push(e.source);
            if !self.directed && e.source != e.target {
                out_adj[e.target].push(e.source);
                in_adj[e.source].push(e.target);
            }
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        let nodes = self
            .nodes
            .into_iter()
            .enumerate()
            .map(|(id, (key, flags))| FunctionNode {
                id,
                key,
                flags,
                roles: Roles {
                    caller: !out_adj[id].is_empty(),
                    callee: !in_adj[id].is_empty(),
                },
            })
            .collect();
        CallGraph {
            nodes,
            edges: self.edges,
            directed: self.directed,
            index: self.index,
            edge_index: self.edge_index,
            out_adj,
            in_adj,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph_from_edges(n: usize, edges: &[(usize, usize)]) -> CallGraph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_function(FunctionKey::new("m.py", format!("f{i}")), NodeFlags::default())
                .unwrap();
        }
        for &(s, t) in edges {
            b.add_call(s, t, 1.0);
        }
        b.build()
    }

    #[test]
    fn parallel_calls_collapse() {
        let g = graph_from_edges(2, &[(0, 1), (0, 1)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edges()[0].weight, 2.0);
    }

    #[test]
    fn duplicate_key_is_integrity_error() {
        let mut b = GraphBuilder::new();
        b.add_function(FunctionKey::new("a", "f"), NodeFlags::default()).unwrap();
        let err = b
            .add_function(FunctionKey::new("a", "f"), NodeFlags::default())
            .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn critical_requires_changed() {
        let mut b = GraphBuilder::new();
        let flags = NodeFlags {
            critical: true,
            ..Default::default()
        };
        assert!(b.add_function(FunctionKey::new("a", "f"), flags).is_err());
    }

    #[test]
    fn roles_follow_edges() {
        let g = graph_from_edges(3, &[(0, 1)]);
        assert_eq!(g.node(0).roles, Roles { caller: true, callee: false });
        assert_eq!(g.node(1).roles, Roles { caller: false, callee: true });
        assert_eq!(g.node(2).roles, Roles::default());
    }

    #[test]
    fn induced_subgraph_identity_and_empty() {
        let g = graph_from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        let all: BTreeSet<_> = g.ids().collect();
        assert_eq!(g.induced_subgraph(&all).unwrap(), g);
        let none = g.induced_subgraph(&BTreeSet::new()).unwrap();
        assert_eq!((none.node_count(), none.edge_count()), (0, 0));
    }

    #[test]
    fn induced_subgraph_on_triangle() {
        // Directed triangle 0->1->2->0: keeping {0,1} leaves only 0->1.
        let g = graph_from_edges(3, &[(0, 1), (1, 2), (2, 0)]);
        let sub = g.induced_subgraph(&[0, 1].into_iter().collect()).unwrap();
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
        // With the reverse edge added there are two.
        let g = graph_from_edges(3, &[(0, 1), (1, 0), (1, 2), (2, 0)]);
        let sub = g.induced_subgraph(&[0, 1].into_iter().collect()).unwrap();
        assert_eq!(sub.edge_count(), 2);
    }

    #[test]
    fn induced_subgraph_rejects_unknown_id() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let err = g.induced_subgraph(&[5].into_iter().collect()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn projection_merges_reciprocal_calls() {
        let g = graph_from_edges(2, &[(0, 1)]);
        let p = g.undirected_projection();
        assert_eq!(p.edge_count(), 1);
        assert!(!p.is_directed());
        assert!(p.has_edge(1, 0));

        let mut b = GraphBuilder::new();
        let a = b.ensure_function(FunctionKey::new("x", "a"));
        let c = b.ensure_function(FunctionKey::new("x", "b"));
        b.add_call(a, c, 2.0);
        b.add_call(c, a, 3.0);
        let p = b.build().undirected_projection();
        assert_eq!(p.edge_count(), 1);
        assert_eq!(p.edges()[0].weight, 5.0);
        assert_eq!(p.out_neighbors(0), &[1]);
        assert_eq!(p.in_neighbors(1), &[0]);
    }

    #[test]
    fn projection_is_idempotent() {
        let g = graph_from_edges(4, &[(0, 1), (1, 0), (2, 2), (3, 1), (1, 3)]);
        let once = g.undirected_projection();
        assert_eq!(once.undirected_projection(), once);
    }
}
