//! Python module `upgrade_lens`: graphs, metrics, diffs, statistics,
//! attention scores and SBOM scans.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyConnectionError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde_json::Value;

use upgrade_lens::diff::{comparison_table, diff_versions, mark_critical, pair_digests};
use upgrade_lens::error::Error;
use upgrade_lens::gat::{pca_project, score_graph as core_score, MetricWeights};
use upgrade_lens::graph::{load_graph, save_graph};
use upgrade_lens::metrics::{
    betweenness_centrality, closeness_centrality, clustering_coefficients, degree_assortativity,
    metrics_report_with, ClosenessMode,
};
use upgrade_lens::supply_chain::{scan_sbom as core_scan, FixtureTransport, LiveTransport};
use upgrade_lens::{stats, FunctionKey};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Transport(_) => PyConnectionError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn mode(name: &str) -> PyResult<ClosenessMode> {
    name.parse().map_err(PyValueError::new_err)
}

/// Directed call graph.
#[pyclass(name = "CallGraph", module = "upgrade_lens", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCallGraph {
    inner: upgrade_lens::CallGraph,
}

#[pymethods]
impl PyCallGraph {
    /// Parses an interchange document.
    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        load_graph(text).map(|inner| PyCallGraph { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| py_err(Error::io(path.display().to_string(), e)))?;
        Self::loads(&text)
    }

    fn dumps(&self) -> String {
        save_graph(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!("CallGraph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// `(path, name)` per node, in id order.
    fn nodes(&self) -> Vec<(String, String)> {
        self.inner.nodes().iter().map(|n| (n.key.path.clone(), n.key.name.clone())).collect()
    }

    /// `(source, target, weight)` per edge.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.source, e.target, e.weight)).collect()
    }

    /// `(changed, vulnerable, critical)` per node.
    fn flags(&self) -> Vec<(bool, bool, bool)> {
        self.inner
            .nodes()
            .iter()
            .map(|n| (n.flags.changed, n.flags.vulnerable, n.flags.critical))
            .collect()
    }

    #[pyo3(signature = (closeness_mode = "undirected"))]
    fn metrics<'py>(&self, py: Python<'py>, closeness_mode: &str) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &metrics_report_with(&self.inner, mode(closeness_mode)?))
    }

    #[pyo3(signature = (mode_name = "undirected"))]
    fn closeness(&self, mode_name: &str) -> PyResult<Vec<f64>> {
        Ok(closeness_centrality(&self.inner, mode(mode_name)?))
    }

    #[pyo3(signature = (normalized = false))]
    fn betweenness(&self, normalized: bool) -> Vec<f64> {
        betweenness_centrality(&self.inner, normalized)
    }

    fn clustering(&self) -> Vec<f64> {
        clustering_coefficients(&self.inner).local
    }

    fn assortativity(&self) -> Option<f64> {
        degree_assortativity(&self.inner)
    }

    /// Attention scores with identity parameters. Returns
    /// `{"scores": [...], "summary": {...}, "pca": [[x, y], ...]}`.
    #[pyo3(signature = (weights = (1.0, 1.0, 1.0)))]
    fn score<'py>(&self, py: Python<'py>, weights: (f64, f64, f64)) -> PyResult<Bound<'py, PyAny>> {
        let w = MetricWeights {
            degree: weights.0,
            norm: weights.1,
            closeness: weights.2,
        };
        let run = core_score(&self.inner, w, None).map_err(py_err)?;
        let pca: Vec<[f64; 2]> = if self.inner.node_count() >= 2 {
            let p = pca_project(&run.embeddings, 2).map_err(py_err)?;
            (0..self.inner.node_count()).map(|r| [p.coords.row(r)[0], p.coords.row(r)[1]]).collect()
        } else {
            Vec::new()
        };
        serialize(
            py,
            &serde_json::json!({"scores": run.scores.score, "summary": run.scores.summary, "pca": pca}),
        )
    }
}

/// Extracts the call graph of a Python source tree. Returns
/// `(graph, [(path, name, digest)], warnings)`.
#[pyfunction]
fn extract(root: PathBuf) -> PyResult<(PyCallGraph, Vec<(String, String, String)>, Vec<String>)> {
    let ex = upgrade_lens::extract::extract_call_graph(&root).map_err(py_err)?;
    let digests = ex.digests.into_iter().map(|(k, d)| (k.path, k.name, d)).collect();
    Ok((PyCallGraph { inner: ex.graph }, digests, ex.warnings))
}

type DigestMap = HashMap<(String, String), String>;

fn keyed(m: DigestMap) -> HashMap<FunctionKey, String> {
    m.into_iter().map(|((p, n), d)| (FunctionKey::new(p, n), d)).collect()
}

/// Compares two versions. Digest maps are keyed by `(path, name)`;
/// `diagnostics` lists `(path, name)` blamed for a breakage.
#[pyfunction]
#[pyo3(signature = (base, upgraded, base_digests, upgraded_digests, diagnostics = None, closeness_mode = "undirected"))]
fn diff<'py>(
    py: Python<'py>,
    base: &PyCallGraph,
    upgraded: &PyCallGraph,
    base_digests: DigestMap,
    upgraded_digests: DigestMap,
    diagnostics: Option<Vec<(String, String)>>,
    closeness_mode: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let hashes = pair_digests(&keyed(base_digests), &keyed(upgraded_digests));
    let mut cmp = diff_versions(&base.inner, &upgraded.inner, &hashes).map_err(py_err)?;
    if let Some(d) = diagnostics {
        let keys: Vec<FunctionKey> = d.into_iter().map(|(p, n)| FunctionKey::new(p, n)).collect();
        cmp = mark_critical(&cmp, &keys).map_err(py_err)?;
    }
    let label = if cmp.broken { "Broken" } else { "Non-broken" };
    let table = comparison_table(&base.inner, &[(label.to_string(), cmp.clone())], mode(closeness_mode)?);
    let out = PyDict::new(py);
    out.set_item("changed", cmp.changed_ids.iter().copied().collect::<Vec<_>>())?;
    out.set_item("critical", cmp.critical_ids.iter().copied().collect::<Vec<_>>())?;
    out.set_item("upgraded", PyCallGraph { inner: cmp.upgraded })?;
    out.set_item("table", serialize(py, &table)?)?;
    out.set_item("table_text", table.to_text())?;
    Ok(out.into_any())
}

#[pyfunction]
fn welch_t_test<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    serialize(py, &stats::welch_t_test(&a, &b).map_err(py_err)?)
}

#[pyfunction]
fn ks_two_sample<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
    serialize(py, &stats::ks_two_sample(&a, &b).map_err(py_err)?)
}

/// Returns `(edges, counts)`.
#[pyfunction]
#[pyo3(signature = (values, bins = 50))]
fn closeness_histogram(values: Vec<f64>, bins: usize) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let h = stats::closeness_histogram(&values, bins).map_err(py_err)?;
    Ok((h.edges, h.counts))
}

/// Scans an SBOM document. With `fixtures` the recorded responses in that
/// directory are replayed; otherwise the live service is queried.
#[pyfunction]
#[pyo3(signature = (document, fixtures = None))]
fn scan_sbom<'py>(py: Python<'py>, document: &str, fixtures: Option<PathBuf>) -> PyResult<Bound<'py, PyAny>> {
    let report = match fixtures {
        Some(dir) => core_scan(document, &FixtureTransport::new(dir)),
        None => core_scan(document, &LiveTransport::from_env()),
    }
    .map_err(py_err)?;
    serialize(py, &report)
}

#[pymodule]
#[pyo3(name = "upgrade_lens")]
fn upgrade_lens_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCallGraph>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(diff, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t_test, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(closeness_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(scan_sbom, m)?)?;
    Ok(())
}
