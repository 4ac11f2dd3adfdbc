//! Package URL parsing (`pkg:type/namespace/name@version?qualifiers#subpath`).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackageUrl {
    /// Lowercased package type, e.g. `pypi`.
    pub ty: String,
    pub namespace: Option<String>,
    pub name: String,
    pub version: Option<String>,
    pub qualifiers: Vec<(String, String)>,
    pub subpath: Option<String>,
}

impl PackageUrl {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Domain(format!("malformed purl {text:?}: {msg}"));
        let rest = text
            .trim()
            .strip_prefix("pkg:")
            .ok_or_else(|| bad("missing pkg: scheme"))?
            .trim_start_matches('/');

        let (rest, subpath) = match rest.split_once('#') {
            Some((r, s)) => (r, Some(s.trim_matches('/'))),
            None => (rest, None),
        };
        let (rest, query) = match rest.split_once('?') {
            Some((r, q)) => (r, Some(q)),
            None => (rest, None),
        };
        let (rest, version) = match rest.rsplit_once('@') {
            Some((r, v)) if !v.is_empty() => (r, Some(decode(v).map_err(|m| bad(&m))?)),
            Some(_) => return Err(bad("empty version")),
            None => (rest, None),
        };

        let rest = rest.trim_end_matches('/');
        let (ty, path) = rest.split_once('/').ok_or_else(|| bad("missing name"))?;
        if ty.is_empty()
            || !ty.starts_with(|c: char| c.is_ascii_alphabetic())
            || !ty.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-'))
        {
            return Err(bad("invalid type"));
        }
        let mut segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
        let name = segments.pop().ok_or_else(|| bad("missing name"))?;
        let name = decode(name).map_err(|m| bad(&m))?;
        if name.is_empty() {
            return Err(bad("missing name"));
        }
        let namespace = if segments.is_empty() {
            None
        } else {
            let parts: std::result::Result<Vec<String>, String> =
                segments.iter().map(|s| decode(s)).collect();
            Some(parts.map_err(|m| bad(&m))?.join("/"))
        };

        let mut qualifiers = Vec::new();
        for pair in query.unwrap_or("").split('&').filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| bad("qualifier without '='"))?;
            qualifiers.push((k.to_ascii_lowercase(), decode(v).map_err(|m| bad(&m))?));
        }

        Ok(PackageUrl {
            ty: ty.to_ascii_lowercase(),
            namespace,
            name,
            version,
            qualifiers,
            subpath: subpath.filter(|s| !s.is_empty()).map(str::to_string),
        })
    }
}

impl fmt::Display for PackageUrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pkg:{}/", self.ty)?;
        if let Some(ns) = &self.namespace {
            write!(f, "{ns}/")?;
        }
        write!(f, "{}", self.name)?;
        if let Some(v) = &self.version {
            write!(f, "@{v}")?;
        }
        Ok(())
    }
}

fn decode(s: &str) -> std::result::Result<String, String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3).ok_or("truncated percent escape")?;
            let b = u8::from_str_radix(hex, 16).map_err(|_| format!("bad percent escape %{hex}"))?;
            out.push(b);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| "percent escapes are not utf-8".to_string())
}
