//! Centrality-weighted graph attention scoring.

mod attention;
mod features;
mod matrix;
mod pca;
mod train;

pub use attention::{
    aggregate, attention_coefficients, beta_weights, node_scores, AttentionMap, AttentionParams,
    BetaWeights, Embeddings, GatScores, MetricWeights, Neighborhoods, ScoreSummary,
    DEFAULT_LEAKY_SLOPE,
};
pub use features::{build_features, min_max, NodeFeatures, FEATURE_DIM, FEATURE_NAMES};
pub use matrix::Matrix;
pub use pca::{pca_project, PcaProjection};
pub use train::{
    loss, loss_and_gradient, sample_pairs, train_attention, Gradient, TrainConfig, TrainOutcome,
    TrainingPairs,
};

use std::collections::BTreeSet;

use crate::error::Result;
use crate::graph::{CallGraph, NodeId};

/// Everything produced by one scoring run.
#[derive(Debug, Clone)]
pub struct ScoringRun {
    pub features: NodeFeatures,
    pub beta: BetaWeights,
    pub params: AttentionParams,
    pub attention: AttentionMap,
    pub embeddings: Embeddings,
    pub scores: GatScores,
}

/// Features, β, attention, embeddings and scores with the given parameters
/// (identity parameters when `params` is `None`). Critical nodes are read
/// from the graph flags.
pub fn score_graph(
    g: &CallGraph,
    weights: MetricWeights,
    params: Option<AttentionParams>,
) -> Result<ScoringRun> {
    let features = build_features(g)?;
    let beta = beta_weights(g, &features, weights)?;
    let params = params.unwrap_or_else(|| AttentionParams::identity(FEATURE_DIM));
    let attention = attention_coefficients(g, &features, &params, &beta)?;
    let embeddings = aggregate(g, &features, &params, &attention)?;
    let critical: BTreeSet<NodeId> = g.ids().filter(|&v| g.node(v).flags.critical).collect();
    let scores = node_scores(g, &attention, &critical)?;
    Ok(ScoringRun {
        features,
        beta,
        params,
        attention,
        embeddings,
        scores,
    })
}
