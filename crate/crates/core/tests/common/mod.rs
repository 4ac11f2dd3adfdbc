//! Brute-force reference implementations used by the oracle tests.
#![allow(dead_code)]

use upgrade_lens::rng::SplitMix64;
use upgrade_lens::{CallGraph, FunctionKey, GraphBuilder, NodeFlags};

pub const INF: usize = usize::MAX;

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Seeded directed graph with occasional self-loops.
pub fn random_graph(n: usize, p: f64, seed: u64) -> CallGraph {
    let mut rng = SplitMix64::new(seed);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_function(FunctionKey::new("g.py", format!("f{i}")), NodeFlags::default()).unwrap();
    }
    for u in 0..n {
        for v in 0..n {
            let q = if u == v { p / 4.0 } else { p };
            if rng.next_f64() < q {
                b.add_call(u, v, 1.0);
            }
        }
    }
    b.build()
}

/// Adjacency matrix without self-loops; symmetric when `undirected`.
pub fn adjacency(g: &CallGraph, undirected: bool) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut a = vec![vec![false; n]; n];
    for e in g.edges() {
        if e.source != e.target {
            a[e.source][e.target] = true;
            if undirected || !g.is_directed() {
                a[e.target][e.source] = true;
            }
        }
    }
    a
}

/// Floyd–Warshall hop distances.
pub fn distances(a: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = a.len();
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] && i != j {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != INF && d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Shortest-path counts from the distance matrix: `σ(s, t)` sums `σ(s, u)`
/// over predecessors `u` of `t` one hop closer to `s`.
pub fn path_counts(a: &[Vec<bool>], d: &[Vec<usize>]) -> Vec<Vec<u128>> {
    let n = a.len();
    let mut sigma = vec![vec![0u128; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&t| d[s][t] != INF).collect();
        order.sort_by_key(|&t| d[s][t]);
        sigma[s][s] = 1;
        for &t in &order {
            if t == s {
                continue;
            }
            sigma[s][t] = (0..n)
                .filter(|&u| a[u][t] && d[s][u] != INF && d[s][u] + 1 == d[s][t])
                .map(|u| sigma[s][u])
                .sum();
        }
    }
    sigma
}

/// Pair-dependency betweenness over ordered pairs; halved for undirected.
pub fn betweenness(g: &CallGraph, normalized: bool) -> Vec<f64> {
    let undirected = !g.is_directed();
    let a = adjacency(g, undirected);
    let d = distances(&a);
    let sigma = path_counts(&a, &d);
    let n = a.len();
    let mut bc = vec![0.0; n];
    for (v, out) in bc.iter_mut().enumerate() {
        for s in 0..n {
            for t in 0..n {
                if s == t || s == v || t == v || d[s][t] == INF {
                    continue;
                }
                if d[s][v] != INF && d[v][t] != INF && d[s][v] + d[v][t] == d[s][t] {
                    *out += (sigma[s][v] * sigma[v][t]) as f64 / sigma[s][t] as f64;
                }
            }
        }
        if undirected {
            *out /= 2.0;
        }
    }
    if normalized {
        if n < 3 {
            return vec![0.0; n];
        }
        let mut scale = ((n - 1) * (n - 2)) as f64;
        if undirected {
            scale /= 2.0;
        }
        bc.iter_mut().for_each(|x| *x /= scale);
    }
    bc
}

#[derive(Clone, Copy)]
pub enum Direction {
    Out,
    In,
    Both,
}

pub fn closeness(g: &CallGraph, dir: Direction) -> Vec<f64> {
    let n = g.node_count();
    let a = adjacency(g, matches!(dir, Direction::Both));
    let d = distances(&a);
    (0..n)
        .map(|v| {
            let (mut r, mut s) = (0usize, 0usize);
            for u in 0..n {
                let duv = match dir {
                    Direction::In => d[u][v],
                    _ => d[v][u],
                };
                if u != v && duv != INF {
                    r += 1;
                    s += duv;
                }
            }
            if s == 0 || n < 2 {
                0.0
            } else {
                (r as f64 / (n - 1) as f64) * (r as f64 / s as f64)
            }
        })
        .collect()
}

pub fn clustering(g: &CallGraph) -> (Vec<f64>, f64) {
    let a = adjacency(g, true);
    let n = a.len();
    let local: Vec<f64> = (0..n)
        .map(|v| {
            let nbrs: Vec<usize> = (0..n).filter(|&u| a[v][u]).collect();
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let mut links = 0;
            for (i, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[i + 1..] {
                    if a[x][y] {
                        links += 1;
                    }
                }
            }
            links as f64 / (k * (k - 1) / 2) as f64
        })
        .collect();
    let avg = if n == 0 { 0.0 } else { local.iter().sum::<f64>() / n as f64 };
    (local, avg)
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

/// Sorted components, each sorted.
pub fn weak_components(g: &CallGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in g.edges() {
        let (x, y) = (find(&mut parent, e.source), find(&mut parent, e.target));
        parent[x] = y;
    }
    group(n, |v| find(&mut parent, v))
}

pub fn strong_components(g: &CallGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let d = distances(&adjacency(g, false));
    group(n, |v| (0..n).find(|&u| d[v][u] != INF && d[u][v] != INF).unwrap())
}

fn group(n: usize, mut label: impl FnMut(usize) -> usize) -> Vec<Vec<usize>> {
    let mut by: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..n {
        by.entry(label(v)).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = by.into_values().collect();
    out.sort();
    out
}

/// Pearson correlation of remaining degrees across both ends of every
/// undirected edge.
pub fn assortativity(g: &CallGraph) -> Option<f64> {
    let a = adjacency(g, true);
    let n = a.len();
    let deg: Vec<f64> = (0..n).map(|v| a[v].iter().filter(|&&x| x).count() as f64 - 1.0).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if a[u][v] {
                xs.push(deg[u]);
                ys.push(deg[v]);
            }
        }
    }
    if xs.is_empty() {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if vx < 1e-12 || vy < 1e-12 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Largest EDF gap evaluated at every observed point.
pub fn ks_d(a: &[f64], b: &[f64]) -> f64 {
    let edf = |xs: &[f64], t: f64| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
    a.iter()
        .chain(b)
        .map(|&t| (edf(a, t) - edf(b, t)).abs())
        .fold(0.0, f64::max)
}

/// `Q(λ) = 2 Σ (−1)^{k−1} exp(−2 k² λ²)`, summed until terms vanish.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-2.0 * k * k * lambda * lambda).exp();
        if term < 1e-300 || k > 1e6 {
            break;
        }
        sum += if (k as u64) % 2 == 1 { term } else { -term };
        k += 1.0;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Normal variates via Box–Muller.
pub fn normal_sample(rng: &mut SplitMix64, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u1 = rng.next_f64().max(1e-300);
            let u2 = rng.next_f64();
            mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect()
}
