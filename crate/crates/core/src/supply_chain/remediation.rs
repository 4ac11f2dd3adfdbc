//! Remediation plans: the smallest upgrade target covering every known fix.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::osv::VulnerabilityRecord;
use super::sbom::{PackageKey, SbomPackage};
use super::version::{compare_versions, Version};
use crate::error::{Error, Result};

pub type AdvisoryMap = BTreeMap<PackageKey, Vec<VulnerabilityRecord>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RemediationPlan {
    pub package: SbomPackage,
    pub vulnerabilities: Vec<VulnerabilityRecord>,
    pub target_version: Option<String>,
    /// No listed advisory names a fixed version.
    pub no_fix: bool,
    pub diagnostics: Vec<String>,
}

/// One plan per SBOM package with at least one advisory, in SBOM order.
/// Duplicate SBOM entries share the first entry's plan.
pub fn map_vulnerabilities(sbom: &[SbomPackage], records: &AdvisoryMap) -> Result<Vec<RemediationPlan>> {
    let known: BTreeSet<PackageKey> = sbom.iter().map(SbomPackage::key).collect();
    for (key, recs) in records {
        if !known.contains(key) {
            return Err(Error::Domain(format!(
                "advisories keyed by {}/{}@{} which is not in the SBOM",
                key.ecosystem, key.name, key.version
            )));
        }
        if let Some(r) = recs.iter().find(|r| &r.affected_package != key) {
            return Err(Error::Domain(format!("advisory {} filed under the wrong package {}", r.id, key.name)));
        }
    }

    let mut seen = BTreeSet::new();
    let mut plans = Vec::new();
    for pkg in sbom {
        let key = pkg.key();
        let Some(recs) = records.get(&key).filter(|r| !r.is_empty()) else { continue };
        if !seen.insert(key) {
            continue;
        }
        let mut diagnostics = Vec::new();
        if Version::parse(&pkg.version).is_err() {
            diagnostics.push(format!("installed version {:?} is not parseable", pkg.version));
        }
        let mut target: Option<&str> = None;
        for r in recs {
            let Some(fixed) = r.fixed_version.as_deref() else {
                diagnostics.push(format!("{}: no fixed version", r.id));
                continue;
            };
            if Version::parse(fixed).is_err() {
                diagnostics.push(format!("{}: unparseable version {fixed:?}, compared lexicographically", r.id));
            }
            target = match target {
                Some(t) if !compare_versions(fixed, t).ordering.is_gt() => Some(t),
                _ => Some(fixed),
            };
        }
        plans.push(RemediationPlan {
            package: pkg.clone(),
            vulnerabilities: recs.clone(),
            target_version: target.map(str::to_string),
            no_fix: target.is_none(),
            diagnostics,
        });
    }
    Ok(plans)
}
