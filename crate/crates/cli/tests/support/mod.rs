//! Fixture locations and the offline pipeline shared by the CLI tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use upgrade_lens::graph::load_graph;
use upgrade_lens::CallGraph;
use upgrade_lens_cli::{run, Command, DiffInputs, RunConfig, TransportMode};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// `caller -> callee [count]` lines plus bare names of edgeless defined
/// functions, sorted; externals are written `<external>:name`.
pub fn edge_lines(g: &CallGraph) -> Vec<String> {
    let label = |id| {
        let n = g.node(id);
        if n.is_external() {
            format!("<external>:{}", n.key.name)
        } else {
            n.key.name.clone()
        }
    };
    let mut lines: Vec<String> = g
        .edges()
        .iter()
        .map(|e| {
            let mut s = format!("{} -> {}", label(e.source), label(e.target));
            if e.weight != 1.0 {
                s.push_str(&format!(" {}", e.weight));
            }
            s
        })
        .collect();
    for v in g.ids() {
        if !g.node(v).is_external() && g.in_degree(v) == 0 && g.out_degree(v) == 0 {
            lines.push(label(v));
        }
    }
    lines.sort();
    lines
}

pub fn expected_lines(path: &Path) -> Vec<String> {
    let mut lines: Vec<String> = read(path)
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect();
    lines.sort();
    lines
}

pub fn load(path: &Path) -> CallGraph {
    load_graph(&read(path)).unwrap()
}

fn step(command: Command, out: PathBuf) {
    let mut cfg = RunConfig::new(command, out);
    cfg.bins = 10;
    run(&cfg).unwrap_or_else(|e| panic!("{e}"));
}

/// extract (both versions), diff with diagnostics, metrics, score.
pub fn run_pipeline(out: &Path) {
    let fx = fixtures();
    step(Command::Extract { source: fx.join("app_v1") }, out.join("v1"));
    step(Command::Extract { source: fx.join("app_v2") }, out.join("v2"));
    step(
        Command::Diff(DiffInputs {
            base: out.join("v1/graph.jsonl"),
            upgraded: out.join("v2/graph.jsonl"),
            base_bodies: Some(out.join("v1/bodies.csv")),
            upgraded_bodies: Some(out.join("v2/bodies.csv")),
            diagnostics: Some(fx.join("diagnostics.csv")),
            ..Default::default()
        }),
        out.join("diff"),
    );
    step(Command::Metrics { graph: out.join("v2/graph.jsonl") }, out.join("metrics"));
    step(Command::Score { graph: out.join("diff/upgraded_marked.jsonl") }, out.join("score"));
}

/// Fixture-backed scan of the 12-component SBOM.
pub fn run_scan(out: &Path) {
    let fx = fixtures();
    let mut cfg = RunConfig::new(
        Command::Scan {
            sbom: fx.join("sbom-12.json"),
            fixtures: Some(fx.join("osv")),
        },
        out,
    );
    cfg.transport = TransportMode::Fixture;
    run(&cfg).unwrap_or_else(|e| panic!("{e}"));
}

/// Drops the leading id column of a CSV document.
pub fn without_id_column(csv: &str) -> String {
    csv.lines()
        .map(|l| l.split_once(',').map_or(l, |(_, rest)| rest))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}
