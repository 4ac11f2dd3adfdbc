//! SBOM parsing: CycloneDX JSON, SPDX JSON and SPDX tag-value, reduced to
//! name, version, ecosystem and purl per component.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::purl::PackageUrl;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SbomPackage {
    pub name: String,
    pub version: String,
    /// The purl type as written, or empty when the component has no purl.
    pub ecosystem: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub purl: Option<String>,
}

impl SbomPackage {
    pub fn key(&self) -> PackageKey {
        PackageKey {
            ecosystem: self.ecosystem.clone(),
            name: self.name.clone(),
            version: self.version.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PackageKey {
    pub ecosystem: String,
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SbomFormat {
    CycloneDx,
    SpdxJson,
    SpdxTagValue,
}

/// A skipped component: `component` is its 0-based position in the document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SbomWarning {
    pub component: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SbomDocument {
    pub format: SbomFormat,
    pub packages: Vec<SbomPackage>,
    pub warnings: Vec<SbomWarning>,
}

struct RawComponent {
    name: Option<String>,
    version: Option<String>,
    purl: Option<String>,
}

pub fn parse_sbom(document: &str) -> Result<SbomDocument> {
    let trimmed = document.trim_start_matches('\u{feff}').trim_start();
    let (format, raw) = if trimmed.starts_with('{') {
        let value: Value = serde_json::from_str(trimmed)
            .map_err(|e| Error::parse(e.line(), e.column(), format!("invalid JSON: {e}")))?;
        json_components(&value)?
    } else if trimmed.lines().any(|l| l.trim_start().starts_with("SPDXVersion:")) {
        (SbomFormat::SpdxTagValue, tag_value_components(trimmed))
    } else {
        return Err(Error::parse(1, 1, "unrecognized SBOM format"));
    };

    let mut packages = Vec::new();
    let mut warnings = Vec::new();
    for (i, c) in raw.into_iter().enumerate() {
        match validate(c) {
            Ok(p) => packages.push(p),
            Err(message) => warnings.push(SbomWarning { component: i, message }),
        }
    }
    Ok(SbomDocument { format, packages, warnings })
}

fn json_components(value: &Value) -> Result<(SbomFormat, Vec<RawComponent>)> {
    let text = |v: Option<&Value>| v.and_then(Value::as_str).map(str::to_string);
    let list = |key: &str| -> Result<Vec<Value>> {
        match value.get(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(Value::Array(a)) => Ok(a.clone()),
            Some(_) => Err(Error::parse(1, 1, format!("`{key}` is not an array"))),
        }
    };

    if value.get("bomFormat").and_then(Value::as_str) == Some("CycloneDX")
        || (value.get("components").is_some() && value.get("spdxVersion").is_none())
    {
        let raw = list("components")?
            .iter()
            .map(|c| RawComponent {
                name: text(c.get("name")),
                version: text(c.get("version")),
                purl: text(c.get("purl")),
            })
            .collect();
        return Ok((SbomFormat::CycloneDx, raw));
    }
    if value.get("spdxVersion").is_some() {
        let raw = list("packages")?
            .iter()
            .map(|p| RawComponent {
                name: text(p.get("name")),
                version: text(p.get("versionInfo")),
                purl: p
                    .get("externalRefs")
                    .and_then(Value::as_array)
                    .into_iter()
                    .flatten()
                    .find(|r| r.get("referenceType").and_then(Value::as_str) == Some("purl"))
                    .and_then(|r| text(r.get("referenceLocator"))),
            })
            .collect();
        return Ok((SbomFormat::SpdxJson, raw));
    }
    Err(Error::parse(1, 1, "unrecognized SBOM format"))
}

fn tag_value_components(text: &str) -> Vec<RawComponent> {
    let mut out: Vec<RawComponent> = Vec::new();
    let mut in_text = false;
    for line in text.lines() {
        if in_text {
            in_text = !line.contains("</text>");
            continue;
        }
        let Some((tag, value)) = line.split_once(':') else { continue };
        let value = value.trim();
        if value.starts_with("<text>") && !value.contains("</text>") {
            in_text = true;
            continue;
        }
        match tag.trim() {
            "PackageName" => out.push(RawComponent {
                name: Some(value.to_string()),
                version: None,
                purl: None,
            }),
            "PackageVersion" => {
                if let Some(c) = out.last_mut() {
                    c.version = Some(value.to_string());
                }
            }
            "ExternalRef" => {
                let fields: Vec<&str> = value.split_whitespace().collect();
                if let (Some(c), ["PACKAGE-MANAGER" | "PACKAGE_MANAGER", "purl", locator]) =
                    (out.last_mut(), fields.as_slice())
                {
                    c.purl.get_or_insert_with(|| locator.to_string());
                }
            }
            _ => {}
        }
    }
    out
}

fn loose(name: &str) -> String {
    name.to_lowercase().replace(['_', '.'], "-")
}

fn validate(c: RawComponent) -> std::result::Result<SbomPackage, String> {
    let name = c.name.filter(|n| !n.trim().is_empty()).ok_or("component has no name")?;
    let version = c
        .version
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| format!("component {name:?} has no version"))?;
    let mut ecosystem = String::new();
    if let Some(purl) = &c.purl {
        let parsed = PackageUrl::parse(purl).map_err(|e| format!("component {name:?}: {e}"))?;
        let qualified = match &parsed.namespace {
            Some(ns) => format!("{ns}/{}", parsed.name),
            None => parsed.name.clone(),
        };
        if loose(&parsed.name) != loose(&name) && loose(&qualified) != loose(&name) {
            return Err(format!("component {name:?}: purl names {:?}", parsed.name));
        }
        if let Some(v) = &parsed.version {
            if *v != version {
                return Err(format!("component {name:?}: purl version {v:?} differs from {version:?}"));
            }
        }
        ecosystem = purl
            .trim()
            .trim_start_matches("pkg:")
            .trim_start_matches('/')
            .split('/')
            .next()
            .unwrap_or_default()
            .to_string();
    }
    Ok(SbomPackage { name, version, ecosystem, purl: c.purl })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclonedx_one_component() {
        let doc = r#"{"bomFormat":"CycloneDX","specVersion":"1.5","components":[
            {"type":"library","name":"Jinja2","version":"2.11.2","purl":"pkg:pypi/jinja2@2.11.2"}]}"#;
        let d = parse_sbom(doc).unwrap();
        assert_eq!(d.format, SbomFormat::CycloneDx);
        assert_eq!(
            d.packages,
            vec![SbomPackage {
                name: "Jinja2".into(),
                version: "2.11.2".into(),
                ecosystem: "pypi".into(),
                purl: Some("pkg:pypi/jinja2@2.11.2".into()),
            }]
        );
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn empty_and_skipped_components() {
        let d = parse_sbom(r#"{"bomFormat":"CycloneDX","components":[]}"#).unwrap();
        assert!(d.packages.is_empty());

        let doc = r#"{"bomFormat":"CycloneDX","components":[
            {"name":"a"},
            {"name":"b","version":"1.0","purl":"pkg:pypi/c@1.0"},
            {"name":"d","version":"1.0","purl":"pkg:pypi/d@2.0"},
            {"name":"e","version":"1.0","purl":"not-a-purl"},
            {"name":"f","version":"3"}]}"#;
        let d = parse_sbom(doc).unwrap();
        assert_eq!(d.packages.len(), 1);
        assert_eq!(d.packages[0].name, "f");
        assert_eq!(d.packages[0].ecosystem, "");
        let skipped: Vec<usize> = d.warnings.iter().map(|w| w.component).collect();
        assert_eq!(skipped, vec![0, 1, 2, 3]);
    }

    #[test]
    fn spdx_tag_value() {
        let doc = "SPDXVersion: SPDX-2.3\nDataLicense: CC0-1.0\n\n\
            PackageName: requests\nSPDXID: SPDXRef-1\nPackageVersion: 2.19.0\n\
            PackageComment: <text>PackageName: ghost\nstill comment</text>\n\
            ExternalRef: PACKAGE-MANAGER purl pkg:pypi/requests@2.19.0\n\n\
            PackageName: left-pad\nPackageVersion: 1.3.0\n";
        let d = parse_sbom(doc).unwrap();
        assert_eq!(d.format, SbomFormat::SpdxTagValue);
        assert_eq!(d.packages.len(), 2);
        assert_eq!(d.packages[0].purl.as_deref(), Some("pkg:pypi/requests@2.19.0"));
        assert_eq!(d.packages[1].name, "left-pad");
    }

    #[test]
    fn spdx_json() {
        let doc = r#"{"spdxVersion":"SPDX-2.3","packages":[{"name":"lodash","versionInfo":"4.17.15",
            "externalRefs":[{"referenceCategory":"PACKAGE-MANAGER","referenceType":"purl","referenceLocator":"pkg:npm/lodash@4.17.15"}]}]}"#;
        let d = parse_sbom(doc).unwrap();
        assert_eq!(d.format, SbomFormat::SpdxJson);
        assert_eq!(d.packages[0].ecosystem, "npm");
    }

    #[test]
    fn unrecognized() {
        assert!(matches!(parse_sbom("hello"), Err(Error::Parse { .. })));
        assert!(matches!(parse_sbom(r#"{"x":1}"#), Err(Error::Parse { .. })));
        assert!(matches!(parse_sbom("{ nope"), Err(Error::Parse { .. })));
    }
}
