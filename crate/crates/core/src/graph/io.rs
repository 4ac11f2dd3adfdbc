//! Line-oriented interchange format and the CodeQL edge-table import.
//!
//! ```text
//! {"schema":"upgrade-lens/1"}
//! {"kind":"fn","path":"app/m.py","name":"app.m.f","changed":false,"vulnerable":false,"critical":false}
//! {"kind":"call","from":["app/m.py","app.m.f"],"to":["app/m.py","app.m.g"],"count":2}
//! ```

use serde::{Deserialize, Serialize, Serializer};

use super::{CallGraph, FunctionKey, GraphBuilder, NodeFlags};
use crate::error::{Error, Result};

pub const SCHEMA: &str = "upgrade-lens/1";

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema: String,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum Record {
    #[serde(rename = "fn")]
    Function {
        path: String,
        name: String,
        #[serde(default)]
        changed: bool,
        #[serde(default)]
        vulnerable: bool,
        #[serde(default)]
        critical: bool,
    },
    #[serde(rename = "call")]
    Call {
        from: (String, String),
        to: (String, String),
        #[serde(default = "one", serialize_with = "write_count")]
        count: f64,
    },
}

fn one() -> f64 {
    1.0
}

// Integral weights are written as integers so call counts read naturally.
fn write_count<S: Serializer>(value: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if value.fract() == 0.0 && value.abs() < 9.0e15 {
        s.serialize_u64(*value as u64)
    } else {
        s.serialize_f64(*value)
    }
}

/// Parses an interchange document. Node ids follow function-record order.
pub fn load_graph(document: &str) -> Result<CallGraph> {
    let mut lines = document
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let mut builder = GraphBuilder::new();
    let Some((line_no, first)) = lines.next() else {
        return Ok(builder.build());
    };
    let header: Header = serde_json::from_str(first)
        .map_err(|e| Error::parse(line_no, e.column(), format!("bad header record: {e}")))?;
    if header.schema != SCHEMA {
        return Err(Error::parse(
            line_no,
            1,
            format!("unsupported schema {:?}, expected {SCHEMA:?}", header.schema),
        ));
    }

    let mut calls = Vec::new();
    for (line_no, line) in lines {
        let record: Record = serde_json::from_str(line)
            .map_err(|e| Error::parse(line_no, e.column(), e.to_string()))?;
        match record {
            Record::Function {
                path,
                name,
                changed,
                vulnerable,
                critical,
            } => {
                let flags = NodeFlags {
                    changed,
                    vulnerable,
                    critical,
                };
                builder
                    .add_function(FunctionKey { path, name }, flags)
                    .map_err(|e| match e {
                        Error::Integrity(m) => Error::Integrity(format!("line {line_no}: {m}")),
                        other => other,
                    })?;
            }
            Record::Call { from, to, count } => {
                if !(count > 0.0 && count.is_finite()) {
                    return Err(Error::parse(line_no, 1, "call count must be positive"));
                }
                calls.push((line_no, from, to, count));
            }
        }
    }

    for (line_no, from, to, count) in calls {
        let resolve = |(path, name): (String, String)| {
            let key = FunctionKey { path, name };
            builder.find(&key).ok_or_else(|| {
                Error::Integrity(format!("line {line_no}: call references unknown function {key}"))
            })
        };
        let s = resolve(from)?;
        let t = resolve(to)?;
        builder.add_call(s, t, count);
    }
    Ok(builder.build())
}

/// Writes `g` in the interchange format; `load_graph` inverts it exactly.
pub fn save_graph(g: &CallGraph) -> String {
    let mut out = String::new();
    out.push_str(&format!("{{\"schema\":\"{SCHEMA}\"}}\n"));
    for node in g.nodes() {
        let rec = Record::Function {
            path: node.key.path.clone(),
            name: node.key.name.clone(),
            changed: node.flags.changed,
            vulnerable: node.flags.vulnerable,
            critical: node.flags.critical,
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    for e in g.edges() {
        let (s, t) = (g.node(e.source), g.node(e.target));
        let rec = Record::Call {
            from: (s.key.path.clone(), s.key.name.clone()),
            to: (t.key.path.clone(), t.key.name.clone()),
            count: e.weight,
        };
        out.push_str(&serde_json::to_string(&rec).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Builds a graph from `caller_path,caller_name,callee_path,callee_name`
/// rows. An optional header row with exactly those column names is skipped.
pub fn import_codeql_edges(rows: &str) -> Result<CallGraph> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(rows.as_bytes());
    let mut builder = GraphBuilder::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            Error::parse(line, 1, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.iter().eq(["caller_path", "caller_name", "callee_path", "callee_name"]) {
            continue;
        }
        let field = |k: usize| -> Result<&str> {
            match record.get(k) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::parse(
                    line,
                    k + 1,
                    format!("row has no value for field {}", k + 1),
                )),
            }
        };
        if record.len() > 4 {
            return Err(Error::parse(line, 5, "row has more than 4 fields"));
        }
        let caller = FunctionKey::new(field(0)?, field(1)?);
        let callee = FunctionKey::new(field(2)?, field(3)?);
        let s = builder.ensure_function(caller);
        let t = builder.ensure_function(callee);
        builder.add_call(s, t, 1.0);
    }
    Ok(builder.build())
}
