//! Reference adapter for Python sources.
//!
//! Functions are named `module.Qual.name` after their file's dotted module
//! path. Resolution is lexical: enclosing function scopes, then module
//! scope, then imports. Calls through `self`, `cls` or arbitrary
//! expressions are left to the external node of the same text.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::lexer::{logical_lines, Kind, Tok};
use super::{AdapterOutput, LanguageAdapter, SourceFile};
use crate::diff::body_digest;
use crate::graph::{FunctionKey, EXTERNAL_PATH};

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct PythonAdapter;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Callee {
    Name(String),
    Dotted(Vec<String>),
    /// Attribute chain hanging off a call result, subscript or literal.
    Expr(String),
}

#[derive(Debug)]
struct ParsedFunction {
    qualname: String,
    /// Enclosing function qualnames, innermost first, starting with itself.
    scopes: Vec<String>,
    tokens: Vec<String>,
    calls: Vec<Callee>,
}

#[derive(Debug)]
struct ParsedFile {
    path: String,
    module: String,
    functions: Vec<ParsedFunction>,
    classes: Vec<String>,
    imports: HashMap<String, String>,
    warnings: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ScopeKind {
    Def,
    Class,
}

struct Scope {
    indent: usize,
    kind: ScopeKind,
    qualname: String,
    function: Option<usize>,
}

pub fn module_name(path: &str) -> String {
    let stem = path.strip_suffix(".py").unwrap_or(path);
    let mut parts: Vec<&str> = stem.split('/').collect();
    if parts.len() > 1 && parts.last() == Some(&"__init__") {
        parts.pop();
    }
    parts.join(".")
}

fn is_keyword(t: &Tok) -> bool {
    t.kind == Kind::Name && KEYWORDS.contains(&t.text.as_str())
}

fn call_sites(toks: &[Tok]) -> Vec<Callee> {
    let mut out = Vec::new();
    for i in 1..toks.len() {
        if !toks[i].is_op("(") || toks[i - 1].kind != Kind::Name || is_keyword(&toks[i - 1]) {
            continue;
        }
        let mut j = i - 1;
        let mut parts = vec![toks[j].text.clone()];
        while j >= 2 && toks[j - 1].is_op(".") && toks[j - 2].kind == Kind::Name && !is_keyword(&toks[j - 2]) {
            j -= 2;
            parts.insert(0, toks[j].text.clone());
        }
        if j >= 1 && toks[j - 1].is_op(".") {
            out.push(Callee::Expr(parts.join(".")));
        } else if j >= 1 && (toks[j - 1].is_name("def") || toks[j - 1].is_name("class")) {
            continue;
        } else if parts.len() == 1 {
            out.push(Callee::Name(parts.pop().unwrap()));
        } else {
            out.push(Callee::Dotted(parts));
        }
    }
    out
}

/// Index of the first `:` outside brackets.
fn header_colon(toks: &[Tok]) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != Kind::Op {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            ":" if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// Dotted package of `module` used as the anchor of relative imports.
fn package_of(path: &str, module: &str) -> Vec<String> {
    let mut parts: Vec<String> = module.split('.').map(str::to_string).collect();
    if !path.ends_with("__init__.py") {
        parts.pop();
    }
    parts
}

fn dotted(toks: &[Tok]) -> (String, usize) {
    let mut s = String::new();
    let mut i = 0;
    while i < toks.len() && (toks[i].kind == Kind::Name || toks[i].is_op(".")) && !toks[i].is_name("as") && !toks[i].is_name("import") {
        s.push_str(&toks[i].text);
        i += 1;
    }
    (s, i)
}

fn parse_import(toks: &[Tok], path: &str, module: &str, imports: &mut HashMap<String, String>, warnings: &mut Vec<String>, line: usize) {
    let items = |toks: &[Tok]| -> Vec<(String, Option<String>)> {
        toks.split(|t| t.is_op(","))
            .filter_map(|item| {
                let item: Vec<&Tok> = item.iter().filter(|t| !t.is_op("(") && !t.is_op(")")).collect();
                let owned: Vec<Tok> = item.into_iter().cloned().collect();
                let (name, used) = dotted(&owned);
                if name.is_empty() {
                    return None;
                }
                let alias = match owned.get(used..) {
                    Some([a, b, ..]) if a.is_name("as") && b.kind == Kind::Name => Some(b.text.clone()),
                    _ => None,
                };
                Some((name, alias))
            })
            .collect()
    };

    if toks[0].is_name("import") {
        for (name, alias) in items(&toks[1..]) {
            match alias {
                Some(a) => imports.insert(a, name),
                None => {
                    let head = name.split('.').next().unwrap_or_default().to_string();
                    imports.insert(head.clone(), head)
                }
            };
        }
        return;
    }

    // from [.]*module import names
    let rest = &toks[1..];
    let level = rest.iter().take_while(|t| t.is_op(".")).count();
    let (base, used) = dotted(&rest[level..]);
    let Some(import_at) = rest.iter().position(|t| t.is_name("import")) else { return };
    debug_assert!(import_at >= level + used);
    let anchor = if level == 0 {
        base.clone()
    } else {
        let mut pkg = package_of(path, module);
        if level - 1 > pkg.len() {
            warnings.push(format!("{path}:{line}: relative import beyond the top-level package"));
            return;
        }
        pkg.truncate(pkg.len() - (level - 1));
        if !base.is_empty() {
            pkg.push(base.clone());
        }
        pkg.join(".")
    };
    for (name, alias) in items(&rest[import_at + 1..]) {
        if name == "*" {
            continue;
        }
        let target = if anchor.is_empty() { name.clone() } else { format!("{anchor}.{name}") };
        imports.insert(alias.unwrap_or(name), target);
    }
    if rest[import_at + 1..].iter().any(|t| t.is_op("*")) {
        warnings.push(format!("{path}:{line}: star import from {anchor} ignored"));
    }
}

fn parse_file(file: &SourceFile) -> ParsedFile {
    let module = module_name(&file.path);
    let mut warnings = Vec::new();
    let lines = logical_lines(&file.text, &mut warnings);
    for w in &mut warnings {
        *w = format!("{}: {w}", file.path);
    }

    let mut functions: Vec<ParsedFunction> = Vec::new();
    let mut by_name: HashMap<String, usize> = HashMap::new();
    let mut classes = Vec::new();
    let mut imports = HashMap::new();
    let mut stack: Vec<Scope> = Vec::new();

    for ll in &lines {
        while stack.last().is_some_and(|s| s.indent >= ll.indent) {
            stack.pop();
        }
        let toks = &ll.tokens;
        let innermost_def = stack.iter().rev().find_map(|s| s.function);
        let open_defs: Vec<usize> = stack.iter().filter_map(|s| s.function).collect();

        let lead = usize::from(toks.first().is_some_and(|t| t.is_name("async")));
        let kind = match (toks.get(lead), toks.get(lead + 1)) {
            (Some(k), Some(n)) if k.is_name("def") && n.kind == Kind::Name => Some(ScopeKind::Def),
            (Some(k), Some(n)) if lead == 0 && k.is_name("class") && n.kind == Kind::Name => Some(ScopeKind::Class),
            _ => None,
        };

        let text: Vec<String> = toks.iter().map(|t| t.text.clone()).collect();
        for &f in &open_defs {
            functions[f].tokens.extend(text.iter().cloned());
        }

        let Some(kind) = kind else {
            if toks[0].is_name("import") || toks[0].is_name("from") {
                parse_import(toks, &file.path, &module, &mut imports, &mut warnings, ll.line);
            } else if let Some(f) = innermost_def {
                functions[f].calls.extend(call_sites(toks));
            }
            continue;
        };

        let name = &toks[lead + 1].text;
        let parent = stack.last().map_or(module.as_str(), |s| s.qualname.as_str());
        let qualname = format!("{parent}.{name}");
        let header_end = header_colon(&toks[lead + 2..]).map(|c| c + lead + 2);
        let (header, body) = match header_end {
            Some(c) => (&toks[lead + 2..c], &toks[c + 1..]),
            None => (&toks[lead + 2..], &toks[toks.len()..]),
        };
        if let Some(f) = innermost_def {
            functions[f].calls.extend(call_sites(header));
        }

        let function = match kind {
            ScopeKind::Class => {
                if let Some(f) = innermost_def {
                    functions[f].calls.extend(call_sites(body));
                }
                classes.push(qualname.clone());
                None
            }
            ScopeKind::Def => {
                let idx = match by_name.get(&qualname) {
                    Some(&i) => {
                        warnings.push(format!("{}:{}: redefinition of {qualname} merged", file.path, ll.line));
                        i
                    }
                    None => {
                        let mut scopes = vec![qualname.clone()];
                        scopes.extend(stack.iter().rev().filter(|s| s.kind == ScopeKind::Def).map(|s| s.qualname.clone()));
                        functions.push(ParsedFunction { qualname: qualname.clone(), scopes, tokens: Vec::new(), calls: Vec::new() });
                        by_name.insert(qualname.clone(), functions.len() - 1);
                        functions.len() - 1
                    }
                };
                functions[idx].tokens.extend(text.iter().cloned());
                functions[idx].calls.extend(call_sites(body));
                Some(idx)
            }
        };
        stack.push(Scope { indent: ll.indent, kind, qualname, function });
    }

    ParsedFile { path: file.path.clone(), module, functions, classes, imports, warnings }
}

enum Resolution {
    Node(FunctionKey),
    External(String),
    Skip,
}

struct Index<'a> {
    defs: HashMap<&'a str, FunctionKey>,
    classes: HashSet<&'a str>,
}

impl Index<'_> {
    /// A defined function, a class constructor, or `None` for unknown targets.
    fn target(&self, name: &str) -> Option<Resolution> {
        if let Some(k) = self.defs.get(name) {
            return Some(Resolution::Node(k.clone()));
        }
        if self.classes.contains(name) {
            return Some(match self.defs.get(format!("{name}.__init__").as_str()) {
                Some(k) => Resolution::Node(k.clone()),
                None => Resolution::Skip,
            });
        }
        None
    }

    fn resolve(&self, file: &ParsedFile, func: &ParsedFunction, callee: &Callee) -> Resolution {
        match callee {
            Callee::Name(n) => {
                for scope in func.scopes.iter().map(String::as_str).chain([file.module.as_str()]) {
                    if let Some(r) = self.target(&format!("{scope}.{n}")) {
                        return r;
                    }
                }
                match file.imports.get(n) {
                    Some(t) => self.target(t).unwrap_or_else(|| Resolution::External(t.clone())),
                    None => Resolution::External(n.clone()),
                }
            }
            Callee::Dotted(parts) => {
                let head = parts[0].as_str();
                let rest = parts[1..].join(".");
                let written = parts.join(".");
                if head == "self" || head == "cls" {
                    return Resolution::External(written);
                }
                if let Some(t) = file.imports.get(head) {
                    let full = format!("{t}.{rest}");
                    return self.target(&full).unwrap_or(Resolution::External(full));
                }
                let local = format!("{}.{head}", file.module);
                if self.classes.contains(local.as_str()) {
                    return self.target(&format!("{local}.{rest}")).unwrap_or(Resolution::External(written));
                }
                Resolution::External(written)
            }
            Callee::Expr(chain) => Resolution::External(format!("?.{chain}")),
        }
    }
}

impl LanguageAdapter for PythonAdapter {
    fn accepts(&self, path: &str) -> bool {
        path.ends_with(".py")
    }

    fn analyze(&self, files: &[SourceFile]) -> AdapterOutput {
        let parsed: Vec<ParsedFile> = files.par_iter().map(parse_file).collect();
        let mut out = AdapterOutput::default();

        let mut index = Index { defs: HashMap::new(), classes: HashSet::new() };
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for pf in &parsed {
            out.warnings.extend(pf.warnings.iter().cloned());
            if let Some(first) = owner.get(pf.module.as_str()) {
                out.warnings.push(format!("{}: module {} already provided by {first}", pf.path, pf.module));
                continue;
            }
            owner.insert(&pf.module, &pf.path);
            for f in &pf.functions {
                let key = FunctionKey::new(&pf.path, &f.qualname);
                index.defs.insert(&f.qualname, key.clone());
                out.functions.push((key, body_digest(&f.tokens.join("\n"))));
            }
            index.classes.extend(pf.classes.iter().map(String::as_str));
        }

        for pf in &parsed {
            if owner.get(pf.module.as_str()) != Some(&pf.path.as_str()) {
                continue;
            }
            for f in &pf.functions {
                let caller = FunctionKey::new(&pf.path, &f.qualname);
                for c in &f.calls {
                    match index.resolve(pf, f, c) {
                        Resolution::Node(k) => out.calls.push((caller.clone(), k)),
                        Resolution::External(name) => out.calls.push((caller.clone(), FunctionKey::new(EXTERNAL_PATH, name))),
                        Resolution::Skip => {}
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(files: &[(&str, &str)]) -> AdapterOutput {
        let files: Vec<SourceFile> = files.iter().map(|(p, t)| SourceFile { path: p.to_string(), text: t.to_string() }).collect();
        PythonAdapter.analyze(&files)
    }

    fn calls(out: &AdapterOutput) -> Vec<String> {
        out.calls.iter().map(|(a, b)| format!("{} -> {}", a.name, if b.path == EXTERNAL_PATH { format!("ext:{}", b.name) } else { b.name.clone() })).collect()
    }

    #[test]
    fn module_names() {
        assert_eq!(module_name("a/b/c.py"), "a.b.c");
        assert_eq!(module_name("a/b/__init__.py"), "a.b");
        assert_eq!(module_name("__init__.py"), "__init__");
    }

    #[test]
    fn scopes_classes_and_attributes() {
        let src = "\
class Store(Base):
    def __init__(self):
        self.items = make()

    def add(self, x):
        self.items.append(x)
        return helper(x)

    @staticmethod
    def build():
        def inner():
            return helper(1)
        return Store(), inner(), Store.build, Store.add(None, 1)

def helper(x):
    return str(x).upper()

value = helper(3)
";
        let out = run(&[("m.py", src)]);
        let names: Vec<&str> = out.functions.iter().map(|(k, _)| k.name.as_str()).collect();
        assert_eq!(names, vec!["m.Store.__init__", "m.Store.add", "m.Store.build", "m.Store.build.inner", "m.helper"]);
        assert_eq!(
            calls(&out),
            vec![
                "m.Store.__init__ -> ext:make",
                "m.Store.add -> ext:self.items.append",
                "m.Store.add -> m.helper",
                "m.Store.build -> m.Store.__init__",
                "m.Store.build -> m.Store.build.inner",
                "m.Store.build -> m.Store.add",
                "m.Store.build.inner -> m.helper",
                "m.helper -> ext:str",
                "m.helper -> ext:?.upper",
            ]
        );
    }

    #[test]
    fn imports_and_relative_imports() {
        let out = run(&[
            ("app/__init__.py", "from .core import run as start\n\ndef main():\n    start()\n"),
            ("app/core.py", "import json\nimport app.util as u\nfrom . import util\nfrom .util import (fmt,\n    parse as p)\nfrom os.path import *\n\ndef run():\n    json.dumps(1)\n    u.fmt()\n    util.parse()\n    fmt()\n    p()\n    missing()\n"),
            ("app/util.py", "def fmt():\n    pass\n\ndef parse():\n    return fmt()\n"),
        ]);
        assert_eq!(
            calls(&out),
            vec![
                "app.main -> app.core.run",
                "app.core.run -> ext:json.dumps",
                "app.core.run -> app.util.fmt",
                "app.core.run -> app.util.parse",
                "app.core.run -> app.util.fmt",
                "app.core.run -> app.util.parse",
                "app.core.run -> ext:missing",
                "app.util.parse -> app.util.fmt",
            ]
        );
        assert_eq!(out.warnings, vec!["app/core.py:6: star import from os.path ignored".to_string()]);
    }

    #[test]
    fn digests_ignore_comments_and_layout() {
        let a = run(&[("m.py", "def f(x):\n    # note\n    return g(x)\n\ndef g(y): return y\n")]);
        let b = run(&[("m.py", "def f( x ):\n    return g(\n        x)  # other\ndef g(y):\n    return y\n")]);
        let c = run(&[("m.py", "def f(x):\n    return g(x + 1)\n\ndef g(y): return y\n")]);
        assert_eq!(a.functions, b.functions);
        assert_ne!(a.functions[0].1, c.functions[0].1);
        assert_eq!(a.functions[1].1, c.functions[1].1);
        assert_eq!(calls(&a), vec!["m.f -> m.g"]);
    }

    #[test]
    fn nested_function_digest_covers_children_and_redefinition_merges() {
        let out = run(&[("m.py", "def f():\n    def h():\n        pass\n    h()\n\ndef f():\n    k()\n")]);
        let names: Vec<&str> = out.functions.iter().map(|(k, _)| k.name.as_str()).collect();
        assert_eq!(names, vec!["m.f", "m.f.h"]);
        assert_eq!(calls(&out), vec!["m.f -> m.f.h", "m.f -> ext:k"]);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn class_without_init_adds_no_edge() {
        let out = run(&[("m.py", "class A:\n    x = make()\n\ndef f():\n    return A()\n")]);
        assert!(out.calls.is_empty());
    }
}
