use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::graph::CallGraph;
use crate::metrics::{
    betweenness_centrality, closeness_centrality, clustering_coefficients, degree_centrality,
    ClosenessMode,
};

pub const FEATURE_DIM: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "in_degree",
    "out_degree",
    "total_degree",
    "closeness",
    "betweenness",
    "clustering",
    "changed",
    "vulnerable",
];

pub(crate) const TOTAL_DEGREE: usize = 2;
pub(crate) const CLOSENESS: usize = 3;

/// Per-node structural features, min-max scaled to `[0, 1]`; the two flag
/// columns are 0/1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatures {
    pub matrix: Matrix,
}

impl NodeFeatures {
    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.matrix.row(i)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.matrix[(i, c)]).collect()
    }

    /// Euclidean norm of every row.
    pub fn norms(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect()
    }
}

/// Min-max scaling; a constant column maps to all zeros.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0.0; values.len()];
    }
    let span = hi - lo;
    values.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
}

pub fn build_features(g: &CallGraph) -> Result<NodeFeatures> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::Domain("features need at least one node".into()));
    }
    let degrees = degree_centrality(g);
    let column = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
    let closeness = closeness_centrality(g, ClosenessMode::Undirected);
    let betweenness = betweenness_centrality(g, false);
    let clustering = clustering_coefficients(g).local;
    let scaled = [
        min_max(&column(&|v| degrees[v].in_degree as f64)),
        min_max(&column(&|v| degrees[v].out_degree as f64)),
        min_max(&column(&|v| degrees[v].total as f64)),
        min_max(&closeness),
        min_max(&betweenness),
        min_max(&clustering),
        column(&|v| f64::from(u8::from(g.node(v).flags.changed))),
        column(&|v| f64::from(u8::from(g.node(v).flags.vulnerable))),
    ];
    let mut matrix = Matrix::zeros(n, FEATURE_DIM);
    for (c, col) in scaled.iter().enumerate() {
        for (v, &x) in col.iter().enumerate() {
            matrix[(v, c)] = x;
        }
    }
    Ok(NodeFeatures { matrix })
}
