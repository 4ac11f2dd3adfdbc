//! Principal component projection of embeddings.
//!
//! Eigenpairs of the covariance matrix come from power iteration with
//! deflation; each new direction is also re-orthogonalized against the ones
//! already found, which keeps the basis orthonormal when eigenvalues are
//! close.

use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use super::Embeddings;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100_000;
// Eigenvalues below this fraction of the largest count as zero.
const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// `n × k` coordinates.
    pub coords: Matrix,
    /// Variance along each component (covariance eigenvalue), non-increasing.
    pub variances: Vec<f64>,
    /// `k × F'` unit loadings; zero rows beyond the data rank.
    pub components: Matrix,
    /// Set when `k` exceeds the numerical rank.
    pub warning: Option<String>,
}

/// Sample covariance (divisor `n − 1`) of the rows of `x`, plus the column means.
fn covariance(x: &Matrix) -> (Matrix, Vec<f64>) {
    let (n, d) = (x.rows(), x.cols());
    let means: Vec<f64> = (0..d)
        .map(|c| (0..n).map(|r| x[(r, c)]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::zeros(d, d);
    for r in 0..n {
        let row = x.row(r);
        for i in 0..d {
            let xi = row[i] - means[i];
            for j in i..d {
                cov[(i, j)] += xi * (row[j] - means[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (cov, means)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// Leading eigenpair of `m` restricted to the complement of `basis`.
fn dominant(m: &Matrix, basis: &[Vec<f64>], rng: &mut SplitMix64) -> (f64, Vec<f64>) {
    let d = m.rows();
    let mut v: Vec<f64> = (0..d).map(|_| rng.next_f64() - 0.5).collect();
    orthogonalize(&mut v, basis);
    if normalize(&mut v) == 0.0 {
        return (0.0, vec![0.0; d]);
    }
    let mut lambda = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let mut w = m.mul_vec(&v);
        orthogonalize(&mut w, basis);
        lambda = dot(&v, &w);
        if normalize(&mut w) == 0.0 {
            return (0.0, v);
        }
        let diff = v.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        v = w;
        if diff < TOLERANCE {
            break;
        }
    }
    (lambda, v)
}

pub fn pca_project(emb: &Embeddings, k: usize) -> Result<PcaProjection> {
    let x = &emb.matrix;
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Domain("PCA needs at least two rows".into()));
    }
    if k == 0 || k > d {
        return Err(Error::Domain(format!("component count {k} outside 1..={d}")));
    }
    let (mut cov, means) = covariance(x);
    let mut rng = SplitMix64::new(0x005E_ED0F_BA5E);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    let mut rank = k;
    let mut top = 0.0;
    for c in 0..k {
        let (lambda, mut v) = dominant(&cov, &basis, &mut rng);
        if c == 0 {
            top = lambda;
        }
        if lambda <= RANK_CUTOFF * top.max(f64::MIN_POSITIVE) || top <= 0.0 {
            rank = c;
            break;
        }
        // Largest-magnitude loading positive.
        let lead = v
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        if lead.1 < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] -= lambda * v[i] * v[j];
            }
        }
        basis.push(v);
        variances.push(lambda);
    }

    let mut components = Matrix::zeros(k, d);
    for (c, v) in basis.iter().enumerate() {
        components.row_mut(c).copy_from_slice(v);
    }
    variances.resize(k, 0.0);
    let mut coords = Matrix::zeros(n, k);
    for r in 0..n {
        let centered: Vec<f64> = x.row(r).iter().zip(&means).map(|(a, m)| a - m).collect();
        for (c, v) in basis.iter().enumerate() {
            coords[(r, c)] = dot(&centered, v);
        }
    }
    let warning = (rank < k).then(|| {
        format!("requested {k} components but the data has rank {rank}; trailing columns are zero")
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(PcaProjection {
        coords,
        variances,
        components,
        warning,
    })
}
