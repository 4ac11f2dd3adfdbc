//! Single-head attention with centrality-weighted coefficients.
//!
//! For a caller `i` and each callee `j` in its out-neighborhood `N(i)`:
//!
//! ```text
//! e_ij  = LeakyReLU(a · [W h_i ‖ W h_j])
//! α_ij  = softmax_j(e_ij)
//! α'_ij = α_ij · β_ij
//! h'_i  = ELU(Σ_j α'_ij W h_j)
//! ```
//!
//! `β_ij` is the mean of the endpoint composite scores built from degree,
//! feature norm and closeness. `α'` is used as is, without renormalizing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::features::{min_max, NodeFeatures, CLOSENESS, TOTAL_DEGREE};
use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};
use crate::graph::{CallGraph, NodeId};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

/// Attention pairs in CSR layout: the pairs of node `i` are
/// `offsets[i]..offsets[i + 1]`, targets ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhoods {
    pub offsets: Vec<usize>,
    pub targets: Vec<NodeId>,
}

impl Neighborhoods {
    pub fn of(g: &CallGraph) -> Self {
        let mut offsets = Vec::with_capacity(g.node_count() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for v in g.ids() {
            targets.extend_from_slice(g.out_neighbors(v));
            offsets.push(targets.len());
        }
        Neighborhoods { offsets, targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn range(&self, i: NodeId) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// `(source, target)` for every pair, in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |i| self.range(i).map(move |k| (i, self.targets[k])))
    }
}

/// Relative weights of degree, feature norm and closeness in `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricWeights {
    pub degree: f64,
    pub norm: f64,
    pub closeness: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        MetricWeights {
            degree: 1.0,
            norm: 1.0,
            closeness: 1.0,
        }
    }
}

impl std::str::FromStr for MetricWeights {
    type Err = String;

    /// Parses `d,n,c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad weight {p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [degree, norm, closeness] => Ok(MetricWeights {
                degree,
                norm,
                closeness,
            }),
            _ => Err(format!("expected three comma-separated weights, got {s:?}")),
        }
    }
}

impl MetricWeights {
    /// Weights divided by their sum and snapped to multiples of 2^-32, so
    /// that scaling all three by a positive constant yields the same result.
    fn canonical(&self) -> Result<[f64; 3]> {
        let w = [self.degree, self.norm, self.closeness];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Domain(format!("metric weights must be finite and >= 0, got {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if sum == 0.0 {
            return Err(Error::Domain("metric weights are all zero".into()));
        }
        const GRID: f64 = 4_294_967_296.0;
        Ok(w.map(|x| (x / sum * GRID).round() / GRID))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaWeights {
    /// Composite score `s_v` per node.
    pub node_score: Vec<f64>,
    /// `β_ij = (s_i + s_j) / 2`, aligned with [`Neighborhoods`] storage.
    pub values: Vec<f64>,
}

pub fn beta_weights(g: &CallGraph, f: &NodeFeatures, weights: MetricWeights) -> Result<BetaWeights> {
    if f.len() != g.node_count() {
        return Err(Error::Domain(format!(
            "feature rows ({}) do not match node count ({})",
            f.len(),
            g.node_count()
        )));
    }
    let [qd, qn, qc] = weights.canonical()?;
    let degree = f.column(TOTAL_DEGREE);
    let closeness = f.column(CLOSENESS);
    let norm = min_max(&f.norms());
    let total = qd + qn + qc;
    let node_score: Vec<f64> = (0..f.len())
        .map(|v| (qd * degree[v] + qn * norm[v] + qc * closeness[v]) / total)
        .collect();
    let hoods = Neighborhoods::of(g);
    let values = hoods
        .pairs()
        .map(|(i, j)| (node_score[i] + node_score[j]) / 2.0)
        .collect();
    Ok(BetaWeights { node_score, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionParams {
    /// `F' × F`
    pub w: Matrix,
    /// Length `2F'`: source half then target half.
    pub a: Vec<f64>,
    pub leaky_slope: f64,
}

impl AttentionParams {
    /// `W = I`, `a = 1`: the untrained default.
    pub fn identity(dim: usize) -> Self {
        AttentionParams {
            w: Matrix::identity(dim),
            a: vec![1.0; 2 * dim],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    fn check(&self, f: &NodeFeatures) -> Result<()> {
        if self.w.cols() != f.dim() {
            return Err(Error::Domain(format!(
                "W has {} columns but features have dimension {}",
                self.w.cols(),
                f.dim()
            )));
        }
        if self.a.len() != 2 * self.w.rows() {
            return Err(Error::Domain(format!(
                "attention vector has length {}, expected {}",
                self.a.len(),
                2 * self.w.rows()
            )));
        }
        Ok(())
    }

    /// `W h_v` for every node.
    pub fn project(&self, f: &NodeFeatures) -> Vec<Vec<f64>> {
        (0..f.len()).map(|v| self.w.mul_vec(f.row(v))).collect()
    }
}

pub(crate) fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

pub(crate) fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionMap {
    pub neighborhoods: Neighborhoods,
    /// Raw scores `e_ij`.
    pub logits: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_prime: Vec<f64>,
}

impl AttentionMap {
    /// Index of pair `(i, j)` in the per-pair vectors.
    pub fn position(&self, i: NodeId, j: NodeId) -> Option<usize> {
        let r = self.neighborhoods.range(i);
        self.neighborhoods.targets[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| r.start + k)
    }
}

pub fn attention_coefficients(
    g: &CallGraph,
    f: &NodeFeatures,
    p: &AttentionParams,
    beta: &BetaWeights,
) -> Result<AttentionMap> {
    p.check(f)?;
    let hoods = Neighborhoods::of(g);
    if f.len() != g.node_count() || beta.values.len() != hoods.len() {
        return Err(Error::Domain("features or β do not match the graph".into()));
    }
    let projected = p.project(f);
    let dim = p.out_dim();
    let (a_src, a_dst) = p.a.split_at(dim);
    let src: Vec<f64> = projected.iter().map(|x| dot(a_src, x)).collect();
    let dst: Vec<f64> = projected.iter().map(|x| dot(a_dst, x)).collect();

    let mut logits = vec![0.0; hoods.len()];
    let mut alpha = vec![0.0; hoods.len()];
    for i in 0..g.node_count() {
        let r = hoods.range(i);
        if r.is_empty() {
            continue;
        }
        for k in r.clone() {
            logits[k] = leaky_relu(src[i] + dst[hoods.targets[k]], p.leaky_slope);
        }
        let max = logits[r.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for k in r.clone() {
            alpha[k] = (logits[k] - max).exp();
            total += alpha[k];
        }
        for k in r {
            alpha[k] /= total;
        }
    }
    let alpha_prime = alpha.iter().zip(&beta.values).map(|(a, b)| a * b).collect();
    Ok(AttentionMap {
        neighborhoods: hoods,
        logits,
        alpha,
        beta: beta.values.clone(),
        alpha_prime,
    })
}

/// Output node features `h'`, one row per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embeddings {
    pub matrix: Matrix,
}

pub fn aggregate(
    g: &CallGraph,
    f: &NodeFeatures,
    p: &AttentionParams,
    att: &AttentionMap,
) -> Result<Embeddings> {
    p.check(f)?;
    if att.neighborhoods.node_count() != g.node_count() || f.len() != g.node_count() {
        return Err(Error::Domain("attention map does not match the graph".into()));
    }
    let projected = p.project(f);
    let dim = p.out_dim();
    let mut matrix = Matrix::zeros(g.node_count(), dim);
    for i in 0..g.node_count() {
        let mut z = vec![0.0; dim];
        for k in att.neighborhoods.range(i) {
            let j = att.neighborhoods.targets[k];
            for (zd, xd) in z.iter_mut().zip(&projected[j]) {
                *zd += att.alpha_prime[k] * xd;
            }
        }
        for (out, zd) in matrix.row_mut(i).iter_mut().zip(z) {
            *out = elu(zd);
        }
    }
    Ok(Embeddings { matrix })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    /// Number of critical functions.
    #[serde(rename = "NC")]
    pub critical_count: usize,
    /// Max/min/mean score over critical functions; `None` when there are none.
    #[serde(rename = "MSC")]
    pub max_critical: Option<f64>,
    #[serde(rename = "mSC")]
    pub min_critical: Option<f64>,
    #[serde(rename = "ASC")]
    pub avg_critical: Option<f64>,
    /// Mean score over all nodes.
    #[serde(rename = "AGS")]
    pub avg_all: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatScores {
    /// Total revised attention received per node.
    pub raw: Vec<f64>,
    /// `raw` min-max scaled to `[0, 1]`; all 0.5 when `raw` is constant.
    pub score: Vec<f64>,
    pub summary: ScoreSummary,
}

pub fn node_scores(g: &CallGraph, att: &AttentionMap, critical: &BTreeSet<NodeId>) -> Result<GatScores> {
    let n = g.node_count();
    if let Some(bad) = critical.iter().find(|&&c| c >= n) {
        return Err(Error::Domain(format!("critical id {bad} is not in the graph")));
    }
    if att.neighborhoods.node_count() != n {
        return Err(Error::Domain("attention map does not match the graph".into()));
    }
    let mut raw = vec![0.0; n];
    for (k, (_, j)) in att.neighborhoods.pairs().enumerate() {
        raw[j] += att.alpha_prime[k];
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let score: Vec<f64> = if hi > lo {
        raw.iter().map(|&r| ((r - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.5; n]
    };
    let crit: Vec<f64> = critical.iter().map(|&c| score[c]).collect();
    let summary = ScoreSummary {
        critical_count: crit.len(),
        max_critical: crit.iter().copied().reduce(f64::max),
        min_critical: crit.iter().copied().reduce(f64::min),
        avg_critical: (!crit.is_empty()).then(|| crit.iter().sum::<f64>() / crit.len() as f64),
        avg_all: if n == 0 { 0.0 } else { score.iter().sum::<f64>() / n as f64 },
    };
    Ok(GatScores { raw, score, summary })
}
