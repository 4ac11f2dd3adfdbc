//! Version comparison: change marking, critical functions and the
//! changed/unchanged partition behind comparison tables.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{CallGraph, FunctionKey, NodeId};
use crate::metrics::{metrics_report_with, CellStyle, ClosenessMode, MetricsReport, REPORT_ROWS};

/// Body digests of one function in the two versions; `None` where absent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DigestPair {
    pub base: Option<String>,
    pub upgraded: Option<String>,
}

pub type BodyHashes = HashMap<FunctionKey, DigestPair>;

/// SHA-256 of the body text with all whitespace removed.
pub fn body_digest(body: &str) -> String {
    let mut hasher = Sha256::new();
    for chunk in body.split_whitespace() {
        hasher.update(chunk.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Joins per-version `key -> digest` maps into digest pairs.
pub fn pair_digests(
    base: &HashMap<FunctionKey, String>,
    upgraded: &HashMap<FunctionKey, String>,
) -> BodyHashes {
    let mut out = BodyHashes::new();
    for (k, d) in base {
        out.entry(k.clone()).or_default().base = Some(d.clone());
    }
    for (k, d) in upgraded {
        out.entry(k.clone()).or_default().upgraded = Some(d.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpgradeComparison {
    pub base: CallGraph,
    /// Carries the changed and critical flags.
    pub upgraded: CallGraph,
    pub changed_ids: BTreeSet<NodeId>,
    pub broken: bool,
    pub critical_ids: BTreeSet<NodeId>,
}

/// Marks changed functions of `upgraded` relative to `base`.
///
/// A function is changed when it is new, when its body digest differs, or
/// when it was a direct neighbor (either direction, in `base`) of a function
/// deleted by the upgrade. Nodes under the external path carry no bodies and
/// are changed only when new.
pub fn diff_versions(
    base: &CallGraph,
    upgraded: &CallGraph,
    body_hashes: &BodyHashes,
) -> Result<UpgradeComparison> {
    let digest = |key: &FunctionKey, want_base: bool| -> Result<&str> {
        let pair = body_hashes.get(key);
        let side = pair.and_then(|p| if want_base { p.base.as_deref() } else { p.upgraded.as_deref() });
        side.ok_or_else(|| {
            Error::Integrity(format!(
                "no {} body digest for {key}",
                if want_base { "base" } else { "upgraded" }
            ))
        })
    };

    let mut changed = BTreeSet::new();
    for node in upgraded.nodes() {
        let in_base = base.find(&node.key).is_some();
        if node.is_external() {
            if !in_base {
                changed.insert(node.id);
            }
            continue;
        }
        let new_digest = digest(&node.key, false)?;
        if !in_base || digest(&node.key, true)? != new_digest {
            changed.insert(node.id);
        }
    }
    for node in base.nodes() {
        if upgraded.find(&node.key).is_some() {
            continue;
        }
        if !node.is_external() {
            digest(&node.key, true)?;
        }
        for &nbr in base.out_neighbors(node.id).iter().chain(base.in_neighbors(node.id)) {
            if let Some(id) = upgraded.find(&base.node(nbr).key) {
                changed.insert(id);
            }
        }
    }

    let mut marked = upgraded.clone();
    for id in marked.ids() {
        let flags = marked.flags_mut(id);
        flags.changed = changed.contains(&id);
        flags.critical = false;
    }
    Ok(UpgradeComparison {
        base: base.clone(),
        upgraded: marked,
        changed_ids: changed,
        broken: false,
        critical_ids: BTreeSet::new(),
    })
}

/// Flags the functions blamed by diagnostics as critical (and changed).
pub fn mark_critical(
    cmp: &UpgradeComparison,
    diagnostics: &[FunctionKey],
) -> Result<UpgradeComparison> {
    let unresolved: Vec<String> = diagnostics
        .iter()
        .filter(|k| cmp.upgraded.find(k).is_none())
        .map(|k| k.to_string())
        .collect();
    if !unresolved.is_empty() {
        return Err(Error::Domain(format!(
            "diagnostics name functions absent from the upgraded graph: {}",
            unresolved.join(", ")
        )));
    }
    let mut out = cmp.clone();
    for key in diagnostics {
        let id = out.upgraded.find(key).expect("checked above");
        let flags = out.upgraded.flags_mut(id);
        flags.changed = true;
        flags.critical = true;
        out.changed_ids.insert(id);
        out.critical_ids.insert(id);
    }
    out.broken = !diagnostics.is_empty() || !out.critical_ids.is_empty();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub changed: CallGraph,
    pub unchanged: CallGraph,
    /// Edges with one endpoint on each side; they belong to neither subgraph.
    pub cross_edges: usize,
}

pub fn partition_subgraphs(cmp: &UpgradeComparison) -> Partition {
    let g = &cmp.upgraded;
    let rest: BTreeSet<NodeId> = g.ids().filter(|id| !cmp.changed_ids.contains(id)).collect();
    let changed = g
        .induced_subgraph(&cmp.changed_ids)
        .expect("changed ids come from the upgraded graph");
    let unchanged = g.induced_subgraph(&rest).expect("complement ids are valid");
    let cross_edges = g
        .edges()
        .iter()
        .filter(|e| cmp.changed_ids.contains(&e.source) != cmp.changed_ids.contains(&e.target))
        .count();
    Partition {
        changed,
        unchanged,
        cross_edges,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantColumns {
    pub label: String,
    pub broken: bool,
    pub unchanged: MetricsReport,
    pub changed: MetricsReport,
    pub cross_edges: usize,
    pub critical: usize,
}

/// Base column followed by unchanged/changed columns per upgrade variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub base: MetricsReport,
    pub variants: Vec<VariantColumns>,
}

pub fn comparison_table(
    base: &CallGraph,
    variants: &[(String, UpgradeComparison)],
    mode: ClosenessMode,
) -> ComparisonTable {
    ComparisonTable {
        base: metrics_report_with(base, mode),
        variants: variants
            .iter()
            .map(|(label, cmp)| {
                let part = partition_subgraphs(cmp);
                VariantColumns {
                    label: label.clone(),
                    broken: cmp.broken,
                    unchanged: metrics_report_with(&part.unchanged, mode),
                    changed: metrics_report_with(&part.changed, mode),
                    cross_edges: part.cross_edges,
                    critical: cmp.critical_ids.len(),
                }
            })
            .collect(),
    }
}

impl ComparisonTable {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["Metric".to_string(), "Base".to_string()];
        for v in &self.variants {
            h.push(format!("{} Unchanged", v.label));
            h.push(format!("{} Changed", v.label));
        }
        h
    }

    fn body(&self, style: CellStyle) -> Vec<Vec<String>> {
        let base = self.base.cells(style);
        let cols: Vec<(Vec<String>, Vec<String>)> = self
            .variants
            .iter()
            .map(|v| (v.unchanged.cells(style), v.changed.cells(style)))
            .collect();
        let mut rows: Vec<Vec<String>> = REPORT_ROWS
            .iter()
            .enumerate()
            .map(|(i, label)| {
                let mut row = vec![label.to_string(), base[i].clone()];
                for (u, c) in &cols {
                    row.push(u[i].clone());
                    row.push(c[i].clone());
                }
                row
            })
            .collect();
        let mut extra = |label: &str, f: &dyn Fn(&VariantColumns) -> String| {
            let mut row = vec![label.to_string(), "-".to_string()];
            for v in &self.variants {
                let cell = f(v);
                row.push(cell.clone());
                row.push(cell);
            }
            rows.push(row);
        };
        extra("Cross-partition edges", &|v| v.cross_edges.to_string());
        extra("Critical functions", &|v| v.critical.to_string());
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for row in self.body(CellStyle::Exact) {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn to_text(&self) -> String {
        let mut rows = vec![self.header()];
        rows.extend(self.body(CellStyle::Human));
        render_aligned(&rows)
    }
}

/// Left-aligned first column, right-aligned numbers, two-space gutters.
pub fn render_aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Reads `path,name,base_digest,upgraded_digest` rows; empty digest cells mean absent.
pub fn parse_hash_table(text: &str) -> Result<BodyHashes> {
    let mut out = BodyHashes::new();
    for (line, fields) in csv_rows(text, &["path", "name", "base_digest", "upgraded_digest"])? {
        if fields.len() != 4 {
            return Err(Error::parse(line, 1, "expected path,name,base_digest,upgraded_digest"));
        }
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
        out.insert(
            FunctionKey::new(&fields[0], &fields[1]),
            DigestPair {
                base: opt(&fields[2]),
                upgraded: opt(&fields[3]),
            },
        );
    }
    Ok(out)
}

/// Reads `path,name,digest` rows as written by the extractor.
pub fn parse_body_digests(text: &str) -> Result<HashMap<FunctionKey, String>> {
    csv_rows(text, &["path", "name", "digest"])?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 3 || f[2].is_empty() {
                Err(Error::parse(line, 1, "expected path,name,digest"))
            } else {
                Ok((FunctionKey::new(&f[0], &f[1]), f[2].clone()))
            }
        })
        .collect()
}

/// Reads `path,name,message` diagnostics rows; the message is informational.
pub fn parse_diagnostics(text: &str) -> Result<Vec<FunctionKey>> {
    csv_rows(text, &["path", "name", "message"])?
        .into_iter()
        .map(|(line, f)| {
            if f.len() < 2 || f[0].is_empty() || f[1].is_empty() {
                Err(Error::parse(line, 1, "expected path,name,message"))
            } else {
                Ok(FunctionKey::new(&f[0], &f[1]))
            }
        })
        .collect()
}

/// Non-blank CSV rows with 1-based line numbers; a leading row equal to
/// `header` is skipped.
pub(crate) fn csv_rows(text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            Error::parse(line, 1, e.to_string())
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && rec.iter().eq(header.iter().copied()) {
            continue;
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}
