//! OSV vulnerability lookups over a pluggable transport.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::purl::PackageUrl;
use super::sbom::{PackageKey, SbomPackage};
use super::version::compare_versions;
use crate::error::{Error, Result};

pub const DEFAULT_OSV_URL: &str = "https://api.osv.dev/v1";
pub const OSV_URL_ENV: &str = "UPGRADE_LENS_OSV_URL";
pub const MAX_IN_FLIGHT: usize = 4;

/// Sends a request body to an OSV endpoint path (`/query`) and returns the
/// raw response text.
pub trait OsvTransport: Sync {
    fn post(&self, endpoint: &str, body: &str) -> Result<String>;
}

/// Replays recorded responses stored as `<sha256 of request body>.json`.
/// Requests without a recording answer `{}` (no advisories).
#[derive(Debug, Clone)]
pub struct FixtureTransport {
    pub dir: PathBuf,
}

impl FixtureTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureTransport { dir: dir.into() }
    }

    pub fn fixture_name(body: &str) -> String {
        format!("{}.json", hex::encode(Sha256::digest(body.as_bytes())))
    }
}

impl OsvTransport for FixtureTransport {
    fn post(&self, _endpoint: &str, body: &str) -> Result<String> {
        let path = self.dir.join(Self::fixture_name(body));
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok("{}".to_string()),
            Err(e) => Err(Error::io(path.display().to_string(), e)),
        }
    }
}

/// HTTP transport. Failed requests are retried after each delay in
/// `backoff`; 4xx answers other than 429 are not retried.
#[derive(Debug)]
pub struct LiveTransport {
    pub base_url: String,
    pub backoff: Vec<Duration>,
    agent: ureq::Agent,
}

impl LiveTransport {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .new_agent();
        LiveTransport {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            backoff: [1, 2, 4].map(Duration::from_secs).to_vec(),
            agent,
        }
    }

    /// Endpoint from `UPGRADE_LENS_OSV_URL`, else the public service.
    pub fn from_env() -> Self {
        match std::env::var(OSV_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Self::new(url.trim()),
            _ => Self::new(DEFAULT_OSV_URL),
        }
    }

    pub fn with_backoff(mut self, backoff: Vec<Duration>) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, url: &str, body: &str) -> std::result::Result<String, (bool, String)> {
        let mut resp = self
            .agent
            .post(url)
            .header("Content-Type", "application/json")
            .send(body)
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status().as_u16();
        if status >= 400 {
            let retry = status == 429 || status >= 500;
            return Err((retry, format!("{url} answered HTTP {status}")));
        }
        resp.body_mut().read_to_string().map_err(|e| (true, e.to_string()))
    }
}

impl OsvTransport for LiveTransport {
    fn post(&self, endpoint: &str, body: &str) -> Result<String> {
        let url = format!("{}{}", self.base_url, endpoint);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&url, body) {
                Ok(text) => return Ok(text),
                Err((retry, msg)) => {
                    let Some(delay) = self.backoff.get(attempts - 1).filter(|_| retry) else {
                        return Err(Error::Transport(format!("{msg} (after {attempts} attempt(s))")));
                    };
                    log::warn!("osv request failed ({msg}), retrying in {delay:?}");
                    std::thread::sleep(*delay);
                }
            }
        }
    }
}

/// One `introduced`/`fixed`/`last_affected` interval from an advisory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRange {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub introduced: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fixed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub last_affected: Option<String>,
}

impl VersionRange {
    /// Whether `version` falls inside the interval; byte order for unparseable versions.
    pub fn contains(&self, version: &str) -> bool {
        let ge = |bound: &str| compare_versions(version, bound).ordering.is_ge();
        let after_start = match self.introduced.as_deref() {
            None | Some("0") => true,
            Some(b) => ge(b),
        };
        let before_end = match (&self.fixed, &self.last_affected) {
            (Some(f), _) => !ge(f),
            (None, Some(l)) => compare_versions(version, l).ordering.is_le(),
            (None, None) => true,
        };
        after_start && before_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VulnerabilityRecord {
    pub id: String,
    pub affected_package: PackageKey,
    pub affected_ranges: Vec<VersionRange>,
    pub fixed_version: Option<String>,
    pub summary: String,
}

#[derive(Serialize)]
struct QueryPackage<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ecosystem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    purl: Option<&'a str>,
}

#[derive(Serialize)]
struct QueryBody<'a> {
    package: QueryPackage<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    version: Option<&'a str>,
}

/// OSV ecosystem name for a purl type; unknown types pass through.
pub fn osv_ecosystem(purl_type: &str) -> String {
    let name = match purl_type.to_ascii_lowercase().as_str() {
        "pypi" => "PyPI",
        "npm" => "npm",
        "maven" => "Maven",
        "cargo" => "crates.io",
        "golang" => "Go",
        "gem" => "RubyGems",
        "nuget" => "NuGet",
        "composer" => "Packagist",
        "hex" => "Hex",
        "pub" => "Pub",
        "cran" => "CRAN",
        "swift" => "SwiftURL",
        _ => return purl_type.to_string(),
    };
    name.to_string()
}

/// Request body for one package. A versioned purl is sent alone; otherwise
/// name, ecosystem and version.
pub fn query_body(pkg: &SbomPackage) -> Result<String> {
    if pkg.name.trim().is_empty() || pkg.version.trim().is_empty() {
        return Err(Error::Domain(format!("package {:?} needs a name and a version", pkg.name)));
    }
    let body = match &pkg.purl {
        Some(purl) => QueryBody {
            package: QueryPackage { name: None, ecosystem: None, purl: Some(purl) },
            version: PackageUrl::parse(purl)?.version.is_none().then_some(pkg.version.as_str()),
        },
        None => QueryBody {
            package: QueryPackage {
                name: Some(&pkg.name),
                ecosystem: (!pkg.ecosystem.is_empty()).then(|| osv_ecosystem(&pkg.ecosystem)),
                purl: None,
            },
            version: Some(&pkg.version),
        },
    };
    Ok(serde_json::to_string(&body).expect("query body serializes"))
}

#[derive(Deserialize)]
struct Response {
    #[serde(default)]
    vulns: Vec<Vuln>,
}

#[derive(Deserialize)]
struct Vuln {
    id: String,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    details: Option<String>,
    #[serde(default)]
    affected: Vec<Affected>,
}

#[derive(Deserialize)]
struct Affected {
    #[serde(default)]
    package: Option<AffectedPackage>,
    #[serde(default)]
    ranges: Vec<Range>,
}

#[derive(Deserialize)]
struct AffectedPackage {
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    purl: Option<String>,
}

#[derive(Deserialize)]
struct Range {
    #[serde(rename = "type", default)]
    kind: String,
    #[serde(default)]
    events: Vec<serde_json::Map<String, serde_json::Value>>,
}

fn event_ranges(events: &[serde_json::Map<String, serde_json::Value>]) -> Vec<VersionRange> {
    let mut out = Vec::new();
    let mut open: Option<VersionRange> = None;
    for ev in events {
        let get = |k: &str| ev.get(k).and_then(|v| v.as_str()).map(str::to_string);
        if let Some(v) = get("introduced") {
            if let Some(r) = open.take() {
                out.push(r);
            }
            open = Some(VersionRange { introduced: Some(v), ..Default::default() });
        } else if let Some(v) = get("fixed") {
            let mut r = open.take().unwrap_or_default();
            r.fixed = Some(v);
            out.push(r);
        } else if let Some(v) = get("last_affected") {
            let mut r = open.take().unwrap_or_default();
            r.last_affected = Some(v);
            out.push(r);
        }
    }
    out.extend(open);
    out
}

fn same_name(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.to_lowercase().replace(['_', '.'], "-");
    norm(a) == norm(b)
}

/// Parses an OSV `/query` response for `pkg`. Only affected entries naming
/// the package contribute ranges (all entries when none match); git ranges
/// are ignored.
pub fn parse_response(pkg: &SbomPackage, text: &str) -> Result<Vec<VulnerabilityRecord>> {
    let resp: Response = serde_json::from_str(text)
        .map_err(|e| Error::parse(e.line(), e.column(), format!("malformed OSV response: {e}")))?;
    let mut out = Vec::with_capacity(resp.vulns.len());
    for v in resp.vulns {
        if v.id.trim().is_empty() {
            return Err(Error::parse(1, 1, "malformed OSV response: advisory without id"));
        }
        let matches = |a: &Affected| {
            a.package.as_ref().is_some_and(|p| {
                p.name.as_deref().is_some_and(|n| same_name(n, &pkg.name))
                    || p.purl.as_deref().zip(pkg.purl.as_deref()).is_some_and(|(x, y)| {
                        PackageUrl::parse(x).ok().zip(PackageUrl::parse(y).ok()).is_some_and(|(x, y)| {
                            x.ty == y.ty && x.namespace == y.namespace && same_name(&x.name, &y.name)
                        })
                    })
            })
        };
        let any_match = v.affected.iter().any(matches);
        let ranges: Vec<VersionRange> = v
            .affected
            .iter()
            .filter(|a| !any_match || matches(a))
            .flat_map(|a| a.ranges.iter())
            .filter(|r| !r.kind.eq_ignore_ascii_case("GIT"))
            .flat_map(|r| event_ranges(&r.events))
            .collect();
        let fixed_version = select_fix(&ranges, &pkg.version);
        let summary = v
            .summary
            .filter(|s| !s.trim().is_empty())
            .or_else(|| v.details.and_then(|d| d.lines().next().map(str::to_string)))
            .unwrap_or_default();
        out.push(VulnerabilityRecord {
            id: v.id,
            affected_package: pkg.key(),
            affected_ranges: ranges,
            fixed_version,
            summary,
        });
    }
    Ok(out)
}

/// The fix of the intervals containing `installed` (largest if several),
/// else the smallest fix above `installed`.
fn select_fix(ranges: &[VersionRange], installed: &str) -> Option<String> {
    let greater = |a: &str, b: &str| compare_versions(a, b).ordering.is_gt();
    let containing = ranges
        .iter()
        .filter(|r| r.contains(installed))
        .filter_map(|r| r.fixed.as_deref())
        .fold(None::<&str>, |best, f| match best {
            Some(b) if !greater(f, b) => Some(b),
            _ => Some(f),
        });
    containing
        .or_else(|| {
            ranges
                .iter()
                .filter_map(|r| r.fixed.as_deref())
                .filter(|f| greater(f, installed))
                .fold(None::<&str>, |best, f| match best {
                    Some(b) if !greater(b, f) => Some(b),
                    _ => Some(f),
                })
        })
        .map(str::to_string)
}

pub fn query_osv(pkg: &SbomPackage, transport: &dyn OsvTransport) -> Result<Vec<VulnerabilityRecord>> {
    let body = query_body(pkg)?;
    let text = transport.post("/query", &body)?;
    parse_response(pkg, &text)
}

/// Queries every package with at most [`MAX_IN_FLIGHT`] requests in flight.
/// Results keep input order; the first error in input order wins.
pub fn query_all(pkgs: &[SbomPackage], transport: &dyn OsvTransport) -> Result<Vec<Vec<VulnerabilityRecord>>> {
    for p in pkgs {
        query_body(p)?;
    }
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<Vec<VulnerabilityRecord>>>> = (0..pkgs.len()).map(|_| None).collect();
    let workers = MAX_IN_FLIGHT.min(pkgs.len());
    let results: Vec<Vec<(usize, Result<Vec<VulnerabilityRecord>>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, AtomicOrdering::SeqCst);
                        if i >= pkgs.len() {
                            break done;
                        }
                        done.push((i, query_osv(&pkgs[i], transport)));
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("osv worker panicked")).collect()
    });
    for (i, r) in results.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every package queried")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    fn pkg(name: &str, version: &str, purl: Option<&str>) -> SbomPackage {
        SbomPackage {
            name: name.into(),
            version: version.into(),
            ecosystem: purl.map(|_| "pypi".to_string()).unwrap_or_default(),
            purl: purl.map(str::to_string),
        }
    }

    struct Recorder(Mutex<Vec<String>>, String);

    impl OsvTransport for Recorder {
        fn post(&self, endpoint: &str, body: &str) -> Result<String> {
            self.0.lock().unwrap().push(format!("{endpoint} {body}"));
            Ok(self.1.clone())
        }
    }

    #[test]
    fn request_bodies() {
        let p = pkg("jinja2", "2.11.2", Some("pkg:pypi/jinja2@2.11.2"));
        assert_eq!(query_body(&p).unwrap(), r#"{"package":{"purl":"pkg:pypi/jinja2@2.11.2"}}"#);
        let p = pkg("jinja2", "2.11.2", Some("pkg:pypi/jinja2"));
        assert_eq!(query_body(&p).unwrap(), r#"{"package":{"purl":"pkg:pypi/jinja2"},"version":"2.11.2"}"#);
        let mut p = pkg("jinja2", "2.11.2", None);
        p.ecosystem = "pypi".into();
        assert_eq!(
            query_body(&p).unwrap(),
            r#"{"package":{"name":"jinja2","ecosystem":"PyPI"},"version":"2.11.2"}"#
        );
    }

    #[test]
    fn malformed_purl_fails_before_request() {
        let t = Recorder(Mutex::new(Vec::new()), "{}".into());
        let p = pkg("x", "1", Some("pkg:pypi"));
        assert!(matches!(query_osv(&p, &t), Err(Error::Domain(_))));
        assert!(matches!(query_all(&[pkg("y", "1", None), p], &t), Err(Error::Domain(_))));
        assert!(t.0.lock().unwrap().is_empty());
    }

    #[test]
    fn response_parsing() {
        let text = r#"{"vulns":[{"id":"GHSA-1","summary":"bad","affected":[
            {"package":{"name":"other","ecosystem":"PyPI"},"ranges":[{"type":"ECOSYSTEM","events":[{"introduced":"0"},{"fixed":"9.0"}]}]},
            {"package":{"name":"Demo_Pkg","ecosystem":"PyPI"},"ranges":[
              {"type":"GIT","events":[{"introduced":"abc"},{"fixed":"def"}]},
              {"type":"ECOSYSTEM","events":[{"introduced":"0"},{"fixed":"1.2.3"},{"introduced":"2.0"},{"fixed":"2.0.5"}]}]}]},
            {"id":"PYSEC-2","details":"first line\nmore","affected":[{"package":{"name":"demo-pkg"},"ranges":[{"type":"ECOSYSTEM","events":[{"introduced":"1.0"},{"last_affected":"1.1"}]}]}]}]}"#;
        let recs = parse_response(&pkg("demo-pkg", "1.1", None), text).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].affected_ranges.len(), 2);
        assert_eq!(recs[0].fixed_version.as_deref(), Some("1.2.3"));
        assert_eq!(recs[0].summary, "bad");
        assert_eq!(recs[1].fixed_version, None);
        assert_eq!(recs[1].summary, "first line");

        let recs = parse_response(&pkg("demo-pkg", "2.0.1", None), text).unwrap();
        assert_eq!(recs[0].fixed_version.as_deref(), Some("2.0.5"));
        assert!(parse_response(&pkg("a", "1", None), "{}").unwrap().is_empty());
        assert!(matches!(parse_response(&pkg("a", "1", None), "[1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_response(&pkg("a", "1", None), r#"{"vulns":[{"id":""}]}"#), Err(Error::Parse { .. })));
    }

    #[test]
    fn range_membership() {
        let r = VersionRange { introduced: Some("1.0".into()), fixed: Some("1.5".into()), last_affected: None };
        assert!(r.contains("1.0") && r.contains("1.4.9") && !r.contains("1.5") && !r.contains("0.9"));
    }

    #[test]
    fn query_all_keeps_order() {
        struct Echo;
        impl OsvTransport for Echo {
            fn post(&self, _: &str, body: &str) -> Result<String> {
                let v: serde_json::Value = serde_json::from_str(body).unwrap();
                let name = v["package"]["name"].as_str().unwrap().to_string();
                Ok(format!(r#"{{"vulns":[{{"id":"ID-{name}"}}]}}"#))
            }
        }
        let pkgs: Vec<SbomPackage> = (0..11).map(|i| pkg(&format!("p{i}"), "1.0", None)).collect();
        let out = query_all(&pkgs, &Echo).unwrap();
        let ids: Vec<String> = out.iter().map(|r| r[0].id.clone()).collect();
        let want: Vec<String> = (0..11).map(|i| format!("ID-p{i}")).collect();
        assert_eq!(ids, want);
    }

    #[test]
    fn fixture_replay_and_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = pkg("jinja2", "2.11.2", Some("pkg:pypi/jinja2@2.11.2"));
        let body = query_body(&p).unwrap();
        let recorded = r#"{"vulns":[{"id":"GHSA-q2x7-8rv6-6q7h","affected":[]}]}"#;
        std::fs::write(dir.path().join(FixtureTransport::fixture_name(&body)), recorded).unwrap();
        let t = FixtureTransport::new(dir.path());
        assert_eq!(t.post("/query", &body).unwrap(), recorded);
        assert_eq!(query_osv(&p, &t).unwrap()[0].id, "GHSA-q2x7-8rv6-6q7h");
        assert!(query_osv(&pkg("unknown", "1", None), &t).unwrap().is_empty());
    }

    #[test]
    fn live_transport_reports_unreachable_host() {
        let t = LiveTransport::new("http://127.0.0.1:9").with_backoff(vec![Duration::ZERO; 3]);
        let err = t.post("/query", "{}").unwrap_err();
        match err {
            Error::Transport(m) => assert!(m.contains("4 attempt"), "{m}"),
            e => panic!("{e:?}"),
        }
    }
}
