//! One function per subcommand. Each reads its inputs, writes report files
//! under the output directory and returns what it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use upgrade_lens::diff::{
    comparison_table, diff_versions, mark_critical, pair_digests, parse_body_digests,
    parse_diagnostics, parse_hash_table, partition_subgraphs, render_aligned,
};
use upgrade_lens::error::{Error, Result};
use upgrade_lens::extract::extract_call_graph;
use upgrade_lens::gat::{
    beta_weights, build_features, pca_project, score_graph, train_attention, AttentionParams,
    TrainConfig, FEATURE_DIM,
};
use upgrade_lens::graph::{load_graph, save_graph, CallGraph};
use upgrade_lens::metrics::{
    betweenness_centrality, closeness_centrality, clustering_coefficients, degree_centrality,
    metrics_report_with, CellStyle, REPORT_ROWS,
};
use upgrade_lens::stats::{closeness_histogram, compare_changed_vs_all};
use upgrade_lens::supply_chain::{scan_sbom, OsvTransport, ScanReport};

use crate::render::{render_histogram_svg, render_scatter_svg};
use crate::RunConfig;

/// Files written (in write order) and non-fatal warnings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

struct Sink {
    dir: PathBuf,
    outcome: Outcome,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            outcome: Outcome::default(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.outcome.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        self.write(name, &text)
    }

    fn warn(&mut self, message: impl Into<String>) {
        self.outcome.warnings.push(message.into());
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_graph(path: &Path) -> Result<CallGraph> {
    load_graph(&read_text(path)?)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// `graph.jsonl` and `bodies.csv` for a source tree.
pub fn cmd_extract(source: &Path, out: &Path) -> Result<Outcome> {
    let ex = extract_call_graph(source)?;
    let mut sink = Sink::new(out)?;
    sink.write("graph.jsonl", &save_graph(&ex.graph))?;
    sink.write("bodies.csv", &ex.bodies_csv())?;
    for w in ex.warnings {
        sink.warn(w);
    }
    Ok(sink.outcome)
}

/// Whole-graph report, per-node metrics and the closeness histogram.
pub fn cmd_metrics(graph: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let g = read_graph(graph)?;
    let mut sink = Sink::new(&cfg.out)?;
    let report = metrics_report_with(&g, cfg.closeness_mode);
    sink.json("metrics.json", &report)?;
    let exact = report.cells(CellStyle::Exact);
    sink.write(
        "metrics.csv",
        &csv_text(
            &["Metric", "Value"],
            REPORT_ROWS.iter().zip(&exact).map(|(l, v)| vec![l.to_string(), v.clone()]),
        ),
    )?;
    let mut rows = vec![vec!["Metric".to_string(), "Value".to_string()]];
    rows.extend(
        REPORT_ROWS
            .iter()
            .zip(report.cells(CellStyle::Human))
            .map(|(l, v)| vec![l.to_string(), v]),
    );
    sink.write("metrics.txt", &render_aligned(&rows))?;

    let degrees = degree_centrality(&g);
    let closeness = closeness_centrality(&g, cfg.closeness_mode);
    let betweenness = betweenness_centrality(&g, cfg.normalized_bc);
    let clustering = clustering_coefficients(&g).local;
    sink.write(
        "nodes.csv",
        &csv_text(
            &["id", "path", "name", "in_degree", "out_degree", "degree", "closeness", "betweenness", "clustering"],
            g.nodes().iter().map(|n| {
                let v = n.id;
                vec![
                    v.to_string(),
                    n.key.path.clone(),
                    n.key.name.clone(),
                    degrees[v].in_degree.to_string(),
                    degrees[v].out_degree.to_string(),
                    degrees[v].total.to_string(),
                    closeness[v].to_string(),
                    betweenness[v].to_string(),
                    clustering[v].to_string(),
                ]
            }),
        ),
    )?;

    let hist = closeness_histogram(&closeness, cfg.bins)?;
    sink.write("closeness_hist.csv", &hist.to_csv())?;
    sink.write(
        "closeness_hist.svg",
        &render_histogram_svg(&hist, "Closeness Centrality Histogram"),
    )?;
    Ok(sink.outcome)
}

/// Inputs of `diff`: two graphs, body digests in one of two layouts and
/// optional diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiffInputs {
    pub base: PathBuf,
    pub upgraded: PathBuf,
    /// `path,name,base_digest,upgraded_digest` table.
    pub hashes: Option<PathBuf>,
    /// `bodies.csv` files written by `extract`.
    pub base_bodies: Option<PathBuf>,
    pub upgraded_bodies: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
    /// Column label; defaults to "Broken" with diagnostics, else "Non-broken".
    pub label: Option<String>,
}

#[derive(Serialize)]
struct SkippedStats {
    skipped: String,
}

/// Comparison table, changed/unchanged subgraphs, marked upgraded graph,
/// closeness tests and the changed-node closeness histogram.
pub fn cmd_diff(inputs: &DiffInputs, cfg: &RunConfig) -> Result<Outcome> {
    let base = read_graph(&inputs.base)?;
    let upgraded = read_graph(&inputs.upgraded)?;
    let hashes = match (&inputs.hashes, &inputs.base_bodies, &inputs.upgraded_bodies) {
        (Some(h), None, None) => parse_hash_table(&read_text(h)?)?,
        (None, Some(b), Some(u)) => pair_digests(
            &parse_body_digests(&read_text(b)?)?,
            &parse_body_digests(&read_text(u)?)?,
        ),
        _ => {
            return Err(Error::Domain(
                "diff needs either --hashes or both --base-bodies and --upgraded-bodies".into(),
            ))
        }
    };
    let diagnostics = match &inputs.diagnostics {
        Some(p) => parse_diagnostics(&read_text(p)?)?,
        None => Vec::new(),
    };
    let mut cmp = diff_versions(&base, &upgraded, &hashes)?;
    if inputs.diagnostics.is_some() {
        cmp = mark_critical(&cmp, &diagnostics)?;
    }
    let label = inputs
        .label
        .clone()
        .unwrap_or_else(|| if cmp.broken { "Broken" } else { "Non-broken" }.to_string());

    let mut sink = Sink::new(&cfg.out)?;
    let table = comparison_table(&base, &[(label, cmp.clone())], cfg.closeness_mode);
    sink.json("comparison.json", &table)?;
    sink.write("comparison.csv", &table.to_csv())?;
    sink.write("comparison.txt", &table.to_text())?;

    let part = partition_subgraphs(&cmp);
    sink.write("changed.jsonl", &save_graph(&part.changed))?;
    sink.write("unchanged.jsonl", &save_graph(&part.unchanged))?;
    sink.write("upgraded_marked.jsonl", &save_graph(&cmp.upgraded))?;
    sink.write(
        "changed_nodes.csv",
        &csv_text(
            &["id", "path", "name", "critical"],
            cmp.changed_ids.iter().map(|&v| {
                let n = cmp.upgraded.node(v);
                vec![
                    v.to_string(),
                    n.key.path.clone(),
                    n.key.name.clone(),
                    n.flags.critical.to_string(),
                ]
            }),
        ),
    )?;

    match compare_changed_vs_all(&cmp, cfg.closeness_mode, cfg.sample_mode) {
        Ok(stats) => sink.json("stats.json", &stats)?,
        Err(Error::Domain(msg)) => {
            sink.warn(format!("closeness tests skipped: {msg}"));
            sink.json("stats.json", &SkippedStats { skipped: msg })?;
        }
        Err(e) => return Err(e),
    }

    let cc = closeness_centrality(&cmp.upgraded, cfg.closeness_mode);
    let changed_cc: Vec<f64> = cmp.changed_ids.iter().map(|&v| cc[v]).collect();
    let hist = closeness_histogram(&changed_cc, cfg.bins)?;
    sink.write("changed_closeness_hist.csv", &hist.to_csv())?;
    sink.write(
        "changed_closeness_hist.svg",
        &render_histogram_svg(&hist, "Closeness Centrality Histogram (changed functions)"),
    )?;
    Ok(sink.outcome)
}

#[derive(Serialize)]
struct TrainingLog<'a> {
    epochs: usize,
    learning_rate: f64,
    seed: u64,
    losses: &'a [f64],
}

/// Attention scores, their summary and a 2-D PCA of the embeddings.
pub fn cmd_score(graph: &Path, cfg: &RunConfig) -> Result<Outcome> {
    let g = read_graph(graph)?;
    let mut sink = Sink::new(&cfg.out)?;
    let params = if cfg.epochs > 0 {
        let features = build_features(&g)?;
        let beta = beta_weights(&g, &features, cfg.weights)?;
        let config = TrainConfig {
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            negative_samples: 1,
            seed: cfg.seed,
        };
        let outcome = train_attention(&g, &features, &beta, AttentionParams::identity(FEATURE_DIM), &config)?;
        sink.json(
            "training.json",
            &TrainingLog {
                epochs: cfg.epochs,
                learning_rate: cfg.learning_rate,
                seed: cfg.seed,
                losses: &outcome.losses,
            },
        )?;
        Some(outcome.params)
    } else {
        None
    };
    let run = score_graph(&g, cfg.weights, params)?;
    sink.write(
        "scores.csv",
        &csv_text(
            &["id", "path", "name", "score", "critical"],
            g.nodes().iter().map(|n| {
                vec![
                    n.id.to_string(),
                    n.key.path.clone(),
                    n.key.name.clone(),
                    run.scores.score[n.id].to_string(),
                    n.flags.critical.to_string(),
                ]
            }),
        ),
    )?;
    sink.json("summary.json", &run.scores.summary)?;

    let highlight: Vec<usize> = g
        .nodes()
        .iter()
        .filter(|n| n.flags.critical || n.flags.vulnerable)
        .map(|n| n.id)
        .collect();
    let title = "PCA of attention embeddings";
    let header = ["id", "path", "name", "pc1", "pc2", "highlight"];
    if g.node_count() < 2 {
        sink.warn("PCA skipped: fewer than two nodes");
        sink.write("pca.csv", &csv_text(&header, []))?;
        sink.write("pca.svg", &render_scatter_svg(&[], &[], title))?;
        return Ok(sink.outcome);
    }
    let pca = pca_project(&run.embeddings, 2)?;
    if let Some(w) = &pca.warning {
        sink.warn(w.clone());
    }
    let points: Vec<(f64, f64)> = (0..g.node_count())
        .map(|r| (pca.coords.row(r)[0], pca.coords.row(r)[1]))
        .collect();
    sink.write(
        "pca.csv",
        &csv_text(
            &header,
            g.nodes().iter().map(|n| {
                vec![
                    n.id.to_string(),
                    n.key.path.clone(),
                    n.key.name.clone(),
                    points[n.id].0.to_string(),
                    points[n.id].1.to_string(),
                    highlight.contains(&n.id).to_string(),
                ]
            }),
        ),
    )?;
    sink.write("pca.svg", &render_scatter_svg(&points, &highlight, title))?;
    Ok(sink.outcome)
}

fn plans_text(report: &ScanReport) -> String {
    let mut out = format!(
        "{} packages scanned, {} vulnerable\n",
        report.packages,
        report.plans.len()
    );
    if report.plans.is_empty() {
        return out;
    }
    out.push('\n');
    let mut rows = vec![vec![
        "Package".to_string(),
        "Installed".to_string(),
        "Advisories".to_string(),
        "Upgrade to".to_string(),
    ]];
    for p in &report.plans {
        rows.push(vec![
            p.package.name.clone(),
            p.package.version.clone(),
            p.vulnerabilities.len().to_string(),
            p.target_version.clone().unwrap_or_else(|| "no fix".to_string()),
        ]);
    }
    out.push_str(&render_aligned(&rows));
    for p in &report.plans {
        out.push_str(&format!("\n{} {}\n", p.package.name, p.package.version));
        for v in &p.vulnerabilities {
            let fix = v.fixed_version.as_deref().unwrap_or("-");
            out.push_str(&format!("  {}  fixed in {}  {}\n", v.id, fix, v.summary));
        }
        for d in &p.diagnostics {
            out.push_str(&format!("  note: {d}\n"));
        }
    }
    out
}

/// Remediation plans for every vulnerable package of an SBOM.
pub fn cmd_scan(sbom: &Path, out: &Path, transport: &dyn OsvTransport) -> Result<Outcome> {
    let report = scan_sbom(&read_text(sbom)?, transport)?;
    let mut sink = Sink::new(out)?;
    sink.json("plans.json", &report)?;
    sink.write(
        "plans.csv",
        &csv_text(
            &["name", "version", "ecosystem", "purl", "advisories", "target_version", "no_fix"],
            report.plans.iter().map(|p| {
                vec![
                    p.package.name.clone(),
                    p.package.version.clone(),
                    p.package.ecosystem.clone(),
                    p.package.purl.clone().unwrap_or_default(),
                    p.vulnerabilities.iter().map(|v| v.id.as_str()).collect::<Vec<_>>().join(";"),
                    p.target_version.clone().unwrap_or_default(),
                    p.no_fix.to_string(),
                ]
            }),
        ),
    )?;
    sink.write("plans.txt", &plans_text(&report))?;
    for w in &report.warnings {
        sink.warn(format!("sbom component {}: {}", w.component, w.message));
    }
    Ok(sink.outcome)
}
