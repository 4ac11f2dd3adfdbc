//! Call-graph extraction from source trees through language adapters.

mod lexer;
pub mod python;

use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{CallGraph, FunctionKey, GraphBuilder, NodeFlags, EXTERNAL_PATH};

pub use python::PythonAdapter;

/// A source file with its path relative to the tree root (`/`-separated).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdapterOutput {
    /// Defined functions with body digests, in definition order.
    pub functions: Vec<(FunctionKey, String)>,
    /// One entry per resolved call site; callees outside the tree use
    /// [`EXTERNAL_PATH`].
    pub calls: Vec<(FunctionKey, FunctionKey)>,
    pub warnings: Vec<String>,
}

pub trait LanguageAdapter: Sync {
    fn accepts(&self, path: &str) -> bool;

    /// Analyzes the whole tree; `files` arrive sorted by path.
    fn analyze(&self, files: &[SourceFile]) -> AdapterOutput;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub graph: CallGraph,
    /// Body digest per defined function, in node order.
    pub digests: Vec<(FunctionKey, String)>,
    pub warnings: Vec<String>,
}

impl Extraction {
    /// `path,name,digest` rows with a header.
    pub fn bodies_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["path", "name", "digest"]).expect("in-memory write");
        for (k, d) in &self.digests {
            w.write_record([&k.path, &k.name, d]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Extracts with the Python reference adapter.
pub fn extract_call_graph(root: &Path) -> Result<Extraction> {
    extract_with(root, &PythonAdapter)
}

pub fn extract_with(root: &Path, adapter: &dyn LanguageAdapter) -> Result<Extraction> {
    if !root.is_dir() {
        return Err(Error::io(
            root.display().to_string(),
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut warnings = Vec::new();
    let mut paths = Vec::new();
    walk(root, "", adapter, &mut paths, &mut warnings);
    paths.sort();

    let mut files = Vec::with_capacity(paths.len());
    for rel in paths {
        match std::fs::read_to_string(root.join(&rel)) {
            Ok(text) => files.push(SourceFile { path: rel, text }),
            Err(e) => warnings.push(format!("{rel}: skipped, {e}")),
        }
    }

    let out = adapter.analyze(&files);
    warnings.extend(out.warnings);

    let mut b = GraphBuilder::new();
    let mut digests = Vec::with_capacity(out.functions.len());
    for (key, digest) in out.functions {
        match b.add_function(key.clone(), NodeFlags::default()) {
            Ok(_) => digests.push((key, digest)),
            Err(_) => warnings.push(format!("{key}: duplicate definition ignored")),
        }
    }
    for (caller, callee) in out.calls {
        let Some(s) = b.find(&caller) else {
            warnings.push(format!("{caller}: call from unknown function ignored"));
            continue;
        };
        let t = match b.find(&callee) {
            Some(t) => t,
            None if callee.path == EXTERNAL_PATH => b.ensure_function(callee),
            None => {
                warnings.push(format!("{callee}: call to unknown function ignored"));
                continue;
            }
        };
        b.add_call(s, t, 1.0);
    }
    Ok(Extraction { graph: b.build(), digests, warnings })
}

fn walk(dir: &Path, rel: &str, adapter: &dyn LanguageAdapter, out: &mut Vec<String>, warnings: &mut Vec<String>) {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) => {
            warnings.push(format!("{}: skipped, {e}", if rel.is_empty() { "." } else { rel }));
            return;
        }
    };
    for entry in entries.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') || name == "__pycache__" {
            continue;
        }
        let child = if rel.is_empty() { name.clone() } else { format!("{rel}/{name}") };
        let path = entry.path();
        if path.is_dir() {
            walk(&path, &child, adapter, out, warnings);
        } else if adapter.accepts(&child) {
            out.push(child);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (p, text) in files {
            let full = dir.path().join(p);
            std::fs::create_dir_all(full.parent().unwrap()).unwrap();
            std::fs::write(full, text).unwrap();
        }
        dir
    }

    #[test]
    fn two_functions_one_call() {
        let d = tree(&[("m.py", "def f():\n    return g()\n\ndef g():\n    pass\n")]);
        let ex = extract_call_graph(d.path()).unwrap();
        assert_eq!(ex.graph.node_count(), 2);
        assert_eq!(ex.graph.edge_count(), 1);
        let f = ex.graph.lookup("m.py", "m.f").unwrap();
        let g = ex.graph.lookup("m.py", "m.g").unwrap();
        assert!(ex.graph.has_edge(f, g));
        assert!(ex.warnings.is_empty(), "{:?}", ex.warnings);
    }

    #[test]
    fn recursion_is_a_self_loop() {
        let d = tree(&[("r.py", "def f(n):\n    return f(n - 1) if n else 0\n")]);
        let ex = extract_call_graph(d.path()).unwrap();
        assert_eq!(ex.graph.node_count(), 1);
        assert!(ex.graph.has_self_loop(0));
    }

    #[test]
    fn empty_tree_and_missing_root() {
        let d = tree(&[("README.txt", "def f(): pass")]);
        let ex = extract_call_graph(d.path()).unwrap();
        assert!(ex.graph.is_empty());
        assert_eq!(ex.bodies_csv(), "path,name,digest\n");
        assert!(extract_call_graph(&d.path().join("nope")).is_err());
    }

    #[test]
    fn unreadable_file_is_skipped_with_warning() {
        let d = tree(&[("a.py", "def f():\n    pass\n")]);
        std::fs::write(d.path().join("b.py"), [0xff, 0xfe, 0x00]).unwrap();
        let ex = extract_call_graph(d.path()).unwrap();
        assert_eq!(ex.graph.node_count(), 1);
        assert_eq!(ex.warnings.len(), 1);
        assert!(ex.warnings[0].starts_with("b.py"));
    }

    #[test]
    fn rerun_is_structurally_equal() {
        let d = tree(&[
            ("pkg/__init__.py", ""),
            ("pkg/a.py", "from .b import h\nimport os\n\ndef f():\n    h()\n    os.path.join('x')\n"),
            ("pkg/b.py", "def h():\n    print('hi')\n"),
        ]);
        let one = extract_call_graph(d.path()).unwrap();
        let two = extract_call_graph(d.path()).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.bodies_csv(), two.bodies_csv());
    }
}
