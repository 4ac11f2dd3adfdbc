//! Version ordering: dotted numeric release, optional pre- or post-release
//! tag, build metadata ignored. Strings that do not start with a digit (after
//! an optional `v`) are unparseable and fall back to byte order.

use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Part {
    Num(u64),
    Text(String),
}

impl Ord for Part {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Part::Num(a), Part::Num(b)) => a.cmp(b),
            (Part::Num(_), Part::Text(_)) => Ordering::Less,
            (Part::Text(_), Part::Num(_)) => Ordering::Greater,
            (Part::Text(a), Part::Text(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Part {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Pre(Vec<Part>),
    Final,
    Post(Vec<Part>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Version {
    release: Vec<u64>,
    stage: Stage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionError(pub String);

impl fmt::Display for VersionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unparseable version {:?}", self.0)
    }
}

impl Version {
    pub fn parse(text: &str) -> Result<Self, VersionError> {
        let err = || VersionError(text.to_string());
        let s = text.trim();
        let s = s.strip_prefix(['v', 'V']).unwrap_or(s);
        let s = s.split('+').next().unwrap_or("");
        if !s.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(err());
        }

        let mut release = Vec::new();
        let mut rest = s;
        loop {
            let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            if end == 0 {
                return Err(err());
            }
            release.push(rest[..end].parse::<u64>().map_err(|_| err())?);
            rest = &rest[end..];
            match rest.strip_prefix('.') {
                Some(r) if r.starts_with(|c: char| c.is_ascii_digit()) => rest = r,
                _ => break,
            }
        }

        let tag = rest.trim_start_matches(['-', '.', '_']);
        if rest.len() - tag.len() > 1 {
            return Err(err());
        }
        if tag.is_empty() {
            if !rest.is_empty() {
                return Err(err());
            }
            return Ok(Version { release, stage: Stage::Final });
        }
        if !tag.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_')) {
            return Err(err());
        }
        let parts = split_tag(&tag.to_ascii_lowercase());
        let stage = match parts.first() {
            Some(Part::Text(t)) if matches!(t.as_str(), "post" | "rev" | "r" | "p") => Stage::Post(parts),
            _ => Stage::Pre(parts),
        };
        Ok(Version { release, stage })
    }

    fn padded(&self, len: usize) -> impl Iterator<Item = u64> + '_ {
        self.release.iter().copied().chain(std::iter::repeat(0)).take(len)
    }
}

fn split_tag(tag: &str) -> Vec<Part> {
    let mut parts = Vec::new();
    for chunk in tag.split(['.', '-', '_']).filter(|c| !c.is_empty()) {
        let mut start = 0;
        let bytes = chunk.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                let piece = &chunk[start..i];
                parts.push(match piece.parse::<u64>() {
                    Ok(n) if bytes[start].is_ascii_digit() => Part::Num(n),
                    _ => Part::Text(piece.to_string()),
                });
                start = i;
            }
        }
    }
    parts
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        let len = self.release.len().max(other.release.len());
        self.padded(len)
            .cmp(other.padded(len))
            .then_with(|| self.stage.cmp(&other.stage))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Outcome of comparing two version strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionOrder {
    pub ordering: Ordering,
    /// Strings that failed to parse; non-empty means byte order was used.
    pub unparseable: Vec<String>,
}

impl VersionOrder {
    pub fn is_fallback(&self) -> bool {
        !self.unparseable.is_empty()
    }
}

pub fn compare_versions(a: &str, b: &str) -> VersionOrder {
    match (Version::parse(a), Version::parse(b)) {
        (Ok(x), Ok(y)) => VersionOrder { ordering: x.cmp(&y), unparseable: Vec::new() },
        (x, y) => {
            let unparseable = [x.err(), y.err()].into_iter().flatten().map(|e| e.0).collect();
            VersionOrder { ordering: a.cmp(b), unparseable }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lt(a: &str, b: &str) {
        let o = compare_versions(a, b);
        assert_eq!(o.ordering, Ordering::Less, "{a} < {b}");
        assert!(!o.is_fallback());
        assert_eq!(compare_versions(b, a).ordering, Ordering::Greater);
    }

    #[test]
    fn ordering_chain() {
        let chain = [
            "0.9", "1.0.0-alpha", "1.0.0-alpha.1", "1.0.0-alpha.beta", "1.0.0-beta.2", "1.0.0-beta.11",
            "1.0.0-rc.1", "1.0.0", "1.0.0.post1", "1.0.1", "1.2.3", "1.4.0", "1.10", "2.0rc1", "2.0rc10", "2.0",
        ];
        for w in chain.windows(2) {
            lt(w[0], w[1]);
        }
    }

    #[test]
    fn padding_and_metadata() {
        for (a, b) in [("1.0", "1.0.0"), ("v2.1", "2.1.0"), ("1.0.0+build.5", "1.0.0"), ("1.0.0-RC1", "1.0.0-rc1")] {
            let o = compare_versions(a, b);
            assert_eq!(o.ordering, Ordering::Equal, "{a} == {b}");
            assert!(!o.is_fallback());
        }
    }

    #[test]
    fn fallback_is_flagged() {
        let o = compare_versions("abc", "1.0");
        assert!(o.is_fallback());
        assert_eq!(o.unparseable, vec!["abc".to_string()]);
        assert_eq!(o.ordering, "abc".cmp("1.0"));
        for s in ["", "v", "1..2", "1.0 beta", "99999999999999999999999"] {
            assert!(Version::parse(s).is_err(), "{s:?}");
        }
    }
}
