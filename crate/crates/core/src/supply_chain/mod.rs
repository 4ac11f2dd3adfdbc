//! SBOM ingestion, OSV lookups and remediation planning.

pub mod osv;
pub mod purl;
pub mod remediation;
pub mod sbom;
pub mod version;

use serde::Serialize;

pub use osv::{query_all, query_osv, FixtureTransport, LiveTransport, OsvTransport, VersionRange, VulnerabilityRecord};
pub use purl::PackageUrl;
pub use remediation::{map_vulnerabilities, AdvisoryMap, RemediationPlan};
pub use sbom::{parse_sbom, PackageKey, SbomDocument, SbomFormat, SbomPackage, SbomWarning};
pub use version::{compare_versions, Version, VersionOrder};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanReport {
    pub packages: usize,
    pub warnings: Vec<SbomWarning>,
    pub plans: Vec<RemediationPlan>,
}

/// Parses an SBOM, queries every package and builds remediation plans.
pub fn scan_sbom(document: &str, transport: &dyn OsvTransport) -> Result<ScanReport> {
    let doc = parse_sbom(document)?;
    let results = query_all(&doc.packages, transport)?;
    let mut advisories = AdvisoryMap::new();
    for (pkg, recs) in doc.packages.iter().zip(results) {
        if !recs.is_empty() {
            advisories.entry(pkg.key()).or_insert(recs);
        }
    }
    let plans = map_vulnerabilities(&doc.packages, &advisories)?;
    Ok(ScanReport { packages: doc.packages.len(), warnings: doc.warnings, plans })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_with_empty_fixture_store() {
        let dir = tempfile::tempdir().unwrap();
        let doc = r#"{"bomFormat":"CycloneDX","components":[{"name":"a","version":"1.0","purl":"pkg:pypi/a@1.0"},{"name":"b"}]}"#;
        let report = scan_sbom(doc, &FixtureTransport::new(dir.path())).unwrap();
        assert_eq!(report.packages, 1);
        assert_eq!(report.warnings.len(), 1);
        assert!(report.plans.is_empty());
    }
}
