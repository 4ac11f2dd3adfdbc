//! Graph metrics over a [`CallGraph`] or any of its subgraphs.
//!
//! Shortest paths use hop counts; edge weights never enter a distance.
//! Clustering and assortativity run on the undirected projection with
//! self-loops dropped. All averages are taken over every node, summing in
//! ascending id order.

mod centrality;
mod structure;

pub use centrality::{
    betweenness_centrality, closeness_centrality, degree_centrality, ClosenessMode, NodeDegree,
};
pub use structure::{
    average_degree_from_counts, clustering_coefficients, connected_components,
    cyclomatic_complexity, cyclomatic_from_counts, degree_assortativity, density,
    density_from_counts, feature_norms, weak_component_count, Clustering, ComponentKind,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::CallGraph;
use structure::mean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetrics {
    pub degree: usize,
    pub in_degree: usize,
    pub out_degree: usize,
    pub closeness: f64,
    pub betweenness: f64,
    pub clustering: f64,
    pub feature_norm: f64,
}

/// Per-node metrics; `feature_norm` is 0 unless feature rows are supplied.
pub fn node_metrics(
    g: &CallGraph,
    mode: ClosenessMode,
    features: Option<&[Vec<f64>]>,
) -> Result<Vec<NodeMetrics>> {
    let degrees = degree_centrality(g);
    let closeness = closeness_centrality(g, mode);
    let betweenness = betweenness_centrality(g, false);
    let clustering = clustering_coefficients(g).local;
    let norms = match features {
        Some(f) => feature_norms(f)?,
        None => vec![0.0; g.node_count()],
    };
    Ok(g.ids()
        .map(|v| NodeMetrics {
            degree: degrees[v].total,
            in_degree: degrees[v].in_degree,
            out_degree: degrees[v].out_degree,
            closeness: closeness[v],
            betweenness: betweenness[v],
            clustering: clustering[v],
            feature_norm: norms[v],
        })
        .collect())
}

/// One column of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub avg_degree: f64,
    pub density: f64,
    pub n_components: usize,
    pub avg_clustering: f64,
    /// `None` is the undefined marker (no edges or zero degree variance).
    pub assortativity: Option<f64>,
    pub avg_betweenness: f64,
    pub avg_betweenness_normalized: f64,
    pub avg_closeness: f64,
    pub cyclomatic: i64,
    pub self_loops: usize,
    /// Set when the graph has no nodes and every average defaulted to 0.
    pub empty: bool,
}

pub fn metrics_report(g: &CallGraph) -> MetricsReport {
    metrics_report_with(g, ClosenessMode::Undirected)
}

pub fn metrics_report_with(g: &CallGraph, mode: ClosenessMode) -> MetricsReport {
    let n = g.node_count();
    let m = g.edge_count();
    let components = weak_component_count(g);
    let bc = betweenness_centrality(g, false);
    let avg_bc = mean(&bc);
    let avg_bc_norm = if n < 3 {
        0.0
    } else {
        let scale = if g.is_directed() {
            ((n - 1) * (n - 2)) as f64
        } else {
            ((n - 1) * (n - 2)) as f64 / 2.0
        };
        mean(&bc.iter().map(|b| b / scale).collect::<Vec<_>>())
    };
    MetricsReport {
        n_nodes: n,
        n_edges: m,
        avg_degree: average_degree_from_counts(n, m),
        density: density_from_counts(n, m),
        n_components: components,
        avg_clustering: clustering_coefficients(g).average,
        assortativity: degree_assortativity(g),
        avg_betweenness: avg_bc,
        avg_betweenness_normalized: avg_bc_norm,
        avg_closeness: mean(&closeness_centrality(g, mode)),
        cyclomatic: cyclomatic_from_counts(m, n, components),
        self_loops: g.self_loop_count(),
        empty: n == 0,
    }
}

/// Row labels in table order.
pub const REPORT_ROWS: [&str; 11] = [
    "Number of nodes",
    "Number of edges",
    "Average degree",
    "Density",
    "Num. of connected components",
    "Average clustering",
    "Degree assortativity coefficient",
    "Avg. betweenness centrality",
    "Avg. betweenness centrality (normalized)",
    "Avg. closeness centrality",
    "Cyclomatic Complexity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStyle {
    /// Shortest round-trip representation.
    Exact,
    /// Six significant digits.
    Human,
}

impl MetricsReport {
    /// Cell strings aligned with [`REPORT_ROWS`].
    pub fn cells(&self, style: CellStyle) -> Vec<String> {
        let real = |x: f64| match style {
            CellStyle::Exact => format!("{x}"),
            CellStyle::Human => format_significant(x, 6),
        };
        vec![
            self.n_nodes.to_string(),
            self.n_edges.to_string(),
            real(self.avg_degree),
            real(self.density),
            self.n_components.to_string(),
            real(self.avg_clustering),
            self.assortativity.map_or_else(|| "undefined".to_string(), real),
            real(self.avg_betweenness),
            real(self.avg_betweenness_normalized),
            real(self.avg_closeness),
            self.cyclomatic.to_string(),
        ]
    }
}

/// Formats `x` with `digits` significant digits, trimming trailing zeros.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{FunctionKey, GraphBuilder, NodeFlags};

    #[test]
    fn empty_report() {
        let r = metrics_report(&CallGraph::default());
        assert!(r.empty);
        assert_eq!(r.n_nodes, 0);
        assert_eq!(r.avg_degree, 0.0);
        assert_eq!(r.assortativity, None);
        assert_eq!(r.cyclomatic, 0);
        assert_eq!(r.cells(CellStyle::Human)[6], "undefined");
    }

    #[test]
    fn report_identities() {
        let mut b = GraphBuilder::new();
        for i in 0..5 {
            b.add_function(FunctionKey::new("m", format!("{i}")), NodeFlags::default())
                .unwrap();
        }
        for (s, t) in [(0, 1), (1, 2), (2, 0), (3, 3)] {
            b.add_call(s, t, 1.0);
        }
        let g = b.build();
        let r = metrics_report(&g);
        assert_eq!(r.avg_degree * r.n_nodes as f64, 2.0 * r.n_edges as f64);
        assert_eq!(r.cyclomatic, 4 - 5 + 2 * 3);
        assert_eq!(r.self_loops, 1);
    }

    #[test]
    fn significant_formatting() {
        assert_eq!(format_significant(0.000328154, 4), "0.0003282");
        assert_eq!(format_significant(3.15684, 5), "3.1568");
        assert_eq!(format_significant(-0.5, 6), "-0.5");
        assert_eq!(format_significant(6219.0, 6), "6219");
    }
}
