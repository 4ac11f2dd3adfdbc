mod common;

use common::*;
use upgrade_lens::metrics::{
    betweenness_centrality, closeness_centrality, clustering_coefficients, connected_components,
    degree_assortativity, ClosenessMode, ComponentKind,
};
use upgrade_lens::rng::SplitMix64;
use upgrade_lens::{CallGraph, FunctionKey, GraphBuilder, NodeFlags};

fn graphs(count: usize) -> Vec<CallGraph> {
    let mut rng = SplitMix64::new(2024);
    (0..count)
        .map(|i| {
            let n = 1 + rng.below(64);
            let p = 0.05 + 0.25 * rng.next_f64();
            random_graph(n, p, 1000 + i as u64)
        })
        .collect()
}

fn assert_all_close(got: &[f64], want: &[f64], what: &str, i: usize) {
    assert_eq!(got.len(), want.len());
    for (v, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(close(*g, *w, 1e-10), "graph {i} {what} node {v}: {g} vs {w}");
    }
}

#[test]
fn brandes_matches_pair_enumeration() {
    for (i, g) in graphs(200).iter().enumerate() {
        for norm in [false, true] {
            assert_all_close(&betweenness_centrality(g, norm), &betweenness(g, norm), "betweenness", i);
            let u = g.undirected_projection();
            assert_all_close(&betweenness_centrality(&u, norm), &betweenness(&u, norm), "undirected betweenness", i);
        }
    }
}

#[test]
fn closeness_matches_floyd_warshall() {
    for (i, g) in graphs(200).iter().enumerate() {
        assert_all_close(&closeness_centrality(g, ClosenessMode::Out), &closeness(g, Direction::Out), "out", i);
        assert_all_close(&closeness_centrality(g, ClosenessMode::In), &closeness(g, Direction::In), "in", i);
        assert_all_close(
            &closeness_centrality(g, ClosenessMode::Undirected),
            &closeness(g, Direction::Both),
            "undirected",
            i,
        );
    }
}

#[test]
fn clustering_components_and_assortativity_match() {
    for (i, g) in graphs(200).iter().enumerate() {
        let c = clustering_coefficients(g);
        let (local, avg) = clustering(g);
        assert_all_close(&c.local, &local, "clustering", i);
        assert!(close(c.average, avg, 1e-10));

        assert_eq!(connected_components(g, ComponentKind::Weak), weak_components(g), "graph {i}");
        assert_eq!(connected_components(g, ComponentKind::Strong), strong_components(g), "graph {i}");

        match (degree_assortativity(g), assortativity(g)) {
            (Some(a), Some(b)) => assert!(close(a, b, 1e-10), "graph {i}: {a} vs {b}"),
            (a, b) => assert_eq!(a.is_some(), b.is_some(), "graph {i}: {a:?} vs {b:?}"),
        }
    }
}

fn undirected(n: usize, edges: &[(usize, usize)]) -> CallGraph {
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_function(FunctionKey::new("a.py", format!("v{i}")), NodeFlags::default()).unwrap();
    }
    for &(u, v) in edges {
        b.add_call(u, v, 1.0);
    }
    b.build().undirected_projection()
}

#[test]
fn hand_derived_anchors() {
    let p3 = undirected(3, &[(0, 1), (1, 2)]);
    assert_eq!(degree_assortativity(&p3), Some(-1.0));
    assert_eq!(closeness_centrality(&p3, ClosenessMode::Undirected)[1], 1.0);

    let star = undirected(4, &[(0, 1), (0, 2), (0, 3)]);
    assert_eq!(betweenness_centrality(&star, false)[0], 3.0);

    let triangle = undirected(3, &[(0, 1), (1, 2), (2, 0)]);
    assert_eq!(clustering_coefficients(&triangle).average, 1.0);
}
