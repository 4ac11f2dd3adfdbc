//! Edge-reconstruction training of the attention parameters.
//!
//! Loss over positive call edges `E` and sampled non-edges `K`:
//! `L = Σ_E softplus(-h'_i·h'_j) + Σ_K softplus(h'_i·h'_k)`, i.e. the
//! logistic loss of `σ(h'_i·h'_j)`. `β` is held fixed; `W` and `a` move by
//! gradient descent with step halving whenever a step would raise the loss.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::attention::{elu, leaky_relu, AttentionParams, BetaWeights, Neighborhoods};
use super::features::NodeFeatures;
use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};
use crate::graph::{CallGraph, NodeId};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Non-edges drawn per positive edge.
    pub negative_samples: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.05,
            negative_samples: 1,
            seed: 42,
        }
    }
}

/// Positive and negative node pairs for the loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPairs {
    pub positive: Vec<(NodeId, NodeId)>,
    pub negative: Vec<(NodeId, NodeId)>,
}

/// Every edge as a positive; for each, up to `per_edge` non-edges `(i, k)`
/// with `k` drawn uniformly by SplitMix64.
pub fn sample_pairs(g: &CallGraph, per_edge: usize, seed: u64) -> TrainingPairs {
    let positive: Vec<(NodeId, NodeId)> = g.edges().iter().map(|e| (e.source, e.target)).collect();
    let edge_set: HashSet<(NodeId, NodeId)> = positive.iter().copied().collect();
    let mut rng = SplitMix64::new(seed);
    let mut negative = Vec::new();
    let n = g.node_count();
    for &(i, _) in &positive {
        for _ in 0..per_edge {
            for _attempt in 0..32 {
                let k = rng.below(n);
                if k != i && !edge_set.contains(&(i, k)) {
                    negative.push((i, k));
                    break;
                }
            }
        }
    }
    TrainingPairs { positive, negative }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of the loss with respect to `W` and `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w: Matrix,
    pub a: Vec<f64>,
}

struct Forward {
    projected: Vec<Vec<f64>>,
    pre_activation: Vec<f64>,
    alpha: Vec<f64>,
    z: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

fn forward(hoods: &Neighborhoods, f: &NodeFeatures, p: &AttentionParams, beta: &BetaWeights) -> Forward {
    let n = f.len();
    let dim = p.out_dim();
    let projected = p.project(f);
    let (a_src, a_dst) = p.a.split_at(dim);
    let src: Vec<f64> = projected.iter().map(|x| dot(a_src, x)).collect();
    let dst: Vec<f64> = projected.iter().map(|x| dot(a_dst, x)).collect();
    let mut pre_activation = vec![0.0; hoods.len()];
    let mut alpha = vec![0.0; hoods.len()];
    let mut z = vec![vec![0.0; dim]; n];
    for i in 0..n {
        let r = hoods.range(i);
        if r.is_empty() {
            continue;
        }
        let mut max = f64::NEG_INFINITY;
        for k in r.clone() {
            pre_activation[k] = src[i] + dst[hoods.targets[k]];
            max = max.max(leaky_relu(pre_activation[k], p.leaky_slope));
        }
        let mut total = 0.0;
        for k in r.clone() {
            alpha[k] = (leaky_relu(pre_activation[k], p.leaky_slope) - max).exp();
            total += alpha[k];
        }
        for k in r {
            alpha[k] /= total;
            let c = alpha[k] * beta.values[k];
            for (zd, xd) in z[i].iter_mut().zip(&projected[hoods.targets[k]]) {
                *zd += c * xd;
            }
        }
    }
    let h = z.iter().map(|row| row.iter().map(|&x| elu(x)).collect()).collect();
    Forward {
        projected,
        pre_activation,
        alpha,
        z,
        h,
    }
}

fn pair_loss(h: &[Vec<f64>], pairs: &TrainingPairs) -> f64 {
    let pos: f64 = pairs.positive.iter().map(|&(i, j)| softplus(-dot(&h[i], &h[j]))).sum();
    let neg: f64 = pairs.negative.iter().map(|&(i, k)| softplus(dot(&h[i], &h[k]))).sum();
    pos + neg
}

fn check_inputs(g: &CallGraph, f: &NodeFeatures, p: &AttentionParams, beta: &BetaWeights) -> Result<Neighborhoods> {
    let hoods = Neighborhoods::of(g);
    if f.len() != g.node_count() || beta.values.len() != hoods.len() {
        return Err(Error::Domain("features or β do not match the graph".into()));
    }
    if p.w.cols() != f.dim() || p.a.len() != 2 * p.w.rows() {
        return Err(Error::Domain("attention parameter shapes do not match the features".into()));
    }
    Ok(hoods)
}

pub fn loss(
    g: &CallGraph,
    f: &NodeFeatures,
    p: &AttentionParams,
    beta: &BetaWeights,
    pairs: &TrainingPairs,
) -> Result<f64> {
    let hoods = check_inputs(g, f, p, beta)?;
    Ok(pair_loss(&forward(&hoods, f, p, beta).h, pairs))
}

/// Loss and its analytic gradient (reverse-mode through ELU, the weighted
/// sum, softmax and LeakyReLU).
pub fn loss_and_gradient(
    g: &CallGraph,
    f: &NodeFeatures,
    p: &AttentionParams,
    beta: &BetaWeights,
    pairs: &TrainingPairs,
) -> Result<(f64, Gradient)> {
    let hoods = check_inputs(g, f, p, beta)?;
    let fw = forward(&hoods, f, p, beta);
    let n = f.len();
    let dim = p.out_dim();

    let mut d_h = vec![vec![0.0; dim]; n];
    let mut accumulate = |i: NodeId, j: NodeId, label: f64| {
        let coeff = sigmoid(dot(&fw.h[i], &fw.h[j])) - label;
        for d in 0..dim {
            let (hi, hj) = (fw.h[i][d], fw.h[j][d]);
            d_h[i][d] += coeff * hj;
            d_h[j][d] += coeff * hi;
        }
    };
    for &(i, j) in &pairs.positive {
        accumulate(i, j, 1.0);
    }
    for &(i, k) in &pairs.negative {
        accumulate(i, k, 0.0);
    }

    let (a_src, a_dst) = p.a.split_at(dim);
    let mut d_proj = vec![vec![0.0; dim]; n];
    let mut d_a = vec![0.0; 2 * dim];
    for i in 0..n {
        let r = hoods.range(i);
        if r.is_empty() {
            continue;
        }
        let d_z: Vec<f64> = (0..dim)
            .map(|d| {
                let z = fw.z[i][d];
                d_h[i][d] * if z > 0.0 { 1.0 } else { z.exp() }
            })
            .collect();
        // dL/dα_ik = β_ik (dz_i · W h_k)
        let d_alpha: Vec<f64> = r
            .clone()
            .map(|k| beta.values[k] * dot(&d_z, &fw.projected[hoods.targets[k]]))
            .collect();
        let weighted: f64 = r.clone().zip(&d_alpha).map(|(k, da)| fw.alpha[k] * da).sum();
        for (slot, k) in r.enumerate() {
            let j = hoods.targets[k];
            let c = fw.alpha[k] * beta.values[k];
            for d in 0..dim {
                d_proj[j][d] += c * d_z[d];
            }
            let d_logit = fw.alpha[k] * (d_alpha[slot] - weighted);
            let s = fw.pre_activation[k];
            let d_pre = d_logit * if s > 0.0 { 1.0 } else { p.leaky_slope };
            for d in 0..dim {
                d_a[d] += d_pre * fw.projected[i][d];
                d_a[dim + d] += d_pre * fw.projected[j][d];
                d_proj[i][d] += d_pre * a_src[d];
                d_proj[j][d] += d_pre * a_dst[d];
            }
        }
    }

    let mut d_w = Matrix::zeros(dim, f.dim());
    for v in 0..n {
        let h = f.row(v);
        for d in 0..dim {
            let g = d_proj[v][d];
            if g != 0.0 {
                for (c, &x) in h.iter().enumerate() {
                    d_w[(d, c)] += g * x;
                }
            }
        }
    }
    Ok((pair_loss(&fw.h, pairs), Gradient { w: d_w, a: d_a }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: AttentionParams,
    /// Loss before training followed by the loss after each epoch.
    pub losses: Vec<f64>,
}

fn step(p: &AttentionParams, g: &Gradient, lr: f64) -> AttentionParams {
    let mut next = p.clone();
    for (w, dw) in next.w.as_mut_slice().iter_mut().zip(g.w.as_slice()) {
        *w -= lr * dw;
    }
    for (a, da) in next.a.iter_mut().zip(&g.a) {
        *a -= lr * da;
    }
    next
}

/// Trains from `init`. The loss sequence is non-increasing: a step that
/// would raise it is retried at half the rate, and after 30 halvings the
/// parameters stay put for that epoch.
pub fn train_attention(
    g: &CallGraph,
    f: &NodeFeatures,
    beta: &BetaWeights,
    init: AttentionParams,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if g.node_count() < 2 || g.edge_count() == 0 {
        return Err(Error::Domain(
            "training needs at least two nodes and one edge".into(),
        ));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::Domain("learning rate must be positive".into()));
    }
    let pairs = sample_pairs(g, config.negative_samples, config.seed);
    let mut params = init;
    let mut current = loss(g, f, &params, beta, &pairs)?;
    let mut losses = vec![current];
    let mut lr = config.learning_rate;
    for _ in 0..config.epochs {
        let (_, grad) = loss_and_gradient(g, f, &params, beta, &pairs)?;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate = step(&params, &grad, lr);
            let l = loss(g, f, &candidate, beta, &pairs)?;
            if l <= current {
                params = candidate;
                current = l;
                accepted = true;
                break;
            }
            lr /= 2.0;
        }
        if !accepted {
            lr = config.learning_rate;
        }
        losses.push(current);
    }
    Ok(TrainOutcome { params, losses })
}
