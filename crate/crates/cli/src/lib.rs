//! Workflows behind the `upgrade-lens` binary.

pub mod commands;
pub mod render;

use std::path::PathBuf;

use serde::Serialize;
use upgrade_lens::error::{Error, Result};
use upgrade_lens::gat::MetricWeights;
use upgrade_lens::metrics::ClosenessMode;
use upgrade_lens::stats::SampleMode;
use upgrade_lens::supply_chain::{FixtureTransport, LiveTransport};

pub use commands::{cmd_diff, cmd_extract, cmd_metrics, cmd_scan, cmd_score, DiffInputs, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportMode {
    Live,
    Fixture,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Extract { source: PathBuf },
    Metrics { graph: PathBuf },
    Diff(DiffInputs),
    Score { graph: PathBuf },
    Scan { sbom: PathBuf, fixtures: Option<PathBuf> },
}

/// One fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub bins: usize,
    pub normalized_bc: bool,
    pub weights: MetricWeights,
    pub transport: TransportMode,
    pub seed: u64,
    pub closeness_mode: ClosenessMode,
    pub sample_mode: SampleMode,
    /// Attention training epochs for `score`; 0 keeps identity parameters.
    pub epochs: usize,
    pub learning_rate: f64,
}

impl RunConfig {
    pub fn new(command: Command, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            out: out.into(),
            bins: 50,
            normalized_bc: false,
            weights: MetricWeights::default(),
            transport: TransportMode::Live,
            seed: 42,
            closeness_mode: ClosenessMode::Undirected,
            sample_mode: SampleMode::ChangedVsAll,
            epochs: 0,
            learning_rate: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::Domain("--bins must be at least 1".into()));
        }
        let w = [self.weights.degree, self.weights.norm, self.weights.closeness];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() == 0.0 {
            return Err(Error::Domain(format!(
                "--weights must be finite, >= 0 and not all zero, got {w:?}"
            )));
        }
        if self.epochs > 0 && !(self.learning_rate > 0.0) {
            return Err(Error::Domain("--learning-rate must be positive".into()));
        }
        Ok(())
    }
}

/// Validates the configuration and runs the command.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match &cfg.command {
        Command::Extract { source } => cmd_extract(source, &cfg.out),
        Command::Metrics { graph } => cmd_metrics(graph, cfg),
        Command::Diff(inputs) => cmd_diff(inputs, cfg),
        Command::Score { graph } => cmd_score(graph, cfg),
        Command::Scan { sbom, fixtures } => match cfg.transport {
            TransportMode::Live => cmd_scan(sbom, &cfg.out, &LiveTransport::from_env()),
            TransportMode::Fixture => {
                let dir = fixtures.as_ref().ok_or_else(|| {
                    Error::Domain("--transport fixture needs --fixtures DIR".into())
                })?;
                if !dir.is_dir() {
                    return Err(Error::io(
                        dir.display().to_string(),
                        std::io::Error::new(std::io::ErrorKind::NotFound, "fixture directory not found"),
                    ));
                }
                cmd_scan(sbom, &cfg.out, &FixtureTransport::new(dir))
            }
        },
    }
}

/// Process exit code for an error class.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Integrity(_) | Error::Io { .. } => 2,
        Error::Domain(_) => 3,
        Error::Transport(_) => 4,
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    level: &'static str,
    kind: &'a str,
    exit_code: i32,
    message: String,
}

/// Single-line JSON record written to stderr on failure.
pub fn error_record(err: &Error) -> String {
    serde_json::to_string(&ErrorRecord {
        level: "error",
        kind: err.kind(),
        exit_code: exit_code(err),
        message: err.to_string(),
    })
    .expect("plain record")
}

/// Single-line JSON record for a usage error (exit code 2).
pub fn usage_record(message: &str) -> String {
    serde_json::to_string(&ErrorRecord {
        level: "error",
        kind: "usage",
        exit_code: 2,
        message: message.trim().to_string(),
    })
    .expect("plain record")
}

pub fn warning_record(message: &str) -> String {
    serde_json::json!({"level": "warning", "message": message}).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_class() {
        assert_eq!(exit_code(&Error::parse(1, 1, "x")), 2);
        assert_eq!(exit_code(&Error::Integrity("x".into())), 2);
        assert_eq!(exit_code(&Error::Domain("x".into())), 3);
        assert_eq!(exit_code(&Error::Transport("x".into())), 4);
    }

    #[test]
    fn error_record_is_one_json_line() {
        let rec = error_record(&Error::Domain("bad\nthing".into()));
        assert!(!rec.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&rec).unwrap();
        assert_eq!(v["kind"], "domain");
        assert_eq!(v["exit_code"], 3);
    }

    #[test]
    fn validation_ranges() {
        let mut cfg = RunConfig::new(Command::Metrics { graph: "g".into() }, "o");
        assert!(cfg.validate().is_ok());
        cfg.bins = 0;
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
        cfg.bins = 1;
        cfg.weights = MetricWeights { degree: 0.0, norm: 0.0, closeness: 0.0 };
        assert!(cfg.validate().is_err());
        cfg.weights.norm = -1.0;
        assert!(cfg.validate().is_err());
    }
}
