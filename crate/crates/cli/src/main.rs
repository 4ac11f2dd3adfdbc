use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use upgrade_lens::gat::MetricWeights;
use upgrade_lens::metrics::ClosenessMode;
use upgrade_lens::stats::SampleMode;
use upgrade_lens_cli::{
    error_record, exit_code, run, usage_record, warning_record, Command, DiffInputs, RunConfig,
    TransportMode,
};

#[derive(Parser)]
#[command(name = "upgrade-lens", version, about = "Call-graph analysis of dependency upgrades")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Histogram bin count.
    #[arg(long, global = true, default_value_t = 50)]
    bins: usize,

    /// Normalize per-node betweenness in nodes.csv.
    #[arg(long, global = true)]
    normalized_bc: bool,

    /// Degree, feature-norm and closeness weights of the attention prior.
    #[arg(long, global = true, default_value = "1,1,1")]
    weights: MetricWeights,

    #[arg(long, global = true, value_enum, default_value = "live")]
    transport: Transport,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    #[arg(long, global = true, default_value = "undirected")]
    closeness_mode: ClosenessMode,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Live,
    Fixture,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sample {
    ChangedVsAll,
    ChangedVsUnchanged,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a call graph from a source tree.
    Extract { source: PathBuf },
    /// Whole-graph metrics report.
    Metrics { graph: PathBuf },
    /// Compare a base and an upgraded graph.
    Diff {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        upgraded: PathBuf,
        #[arg(long)]
        hashes: Option<PathBuf>,
        #[arg(long, requires = "upgraded_bodies")]
        base_bodies: Option<PathBuf>,
        #[arg(long, requires = "base_bodies")]
        upgraded_bodies: Option<PathBuf>,
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long, value_enum, default_value = "changed-vs-all")]
        sample: Sample,
    },
    /// Attention scores for every function.
    Score {
        graph: PathBuf,
        /// Training epochs; 0 scores with identity parameters.
        #[arg(long, default_value_t = 0)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f64,
    },
    /// Vulnerability scan of an SBOM.
    Scan {
        sbom: PathBuf,
        /// Directory of recorded responses for --transport fixture.
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

fn config(cli: Cli) -> RunConfig {
    let mut epochs = 0;
    let mut learning_rate = 0.05;
    let mut sample_mode = SampleMode::ChangedVsAll;
    let command = match cli.command {
        Cmd::Extract { source } => Command::Extract { source },
        Cmd::Metrics { graph } => Command::Metrics { graph },
        Cmd::Diff {
            base,
            upgraded,
            hashes,
            base_bodies,
            upgraded_bodies,
            diagnostics,
            label,
            sample,
        } => {
            sample_mode = match sample {
                Sample::ChangedVsAll => SampleMode::ChangedVsAll,
                Sample::ChangedVsUnchanged => SampleMode::ChangedVsUnchanged,
            };
            Command::Diff(DiffInputs {
                base,
                upgraded,
                hashes,
                base_bodies,
                upgraded_bodies,
                diagnostics,
                label,
            })
        }
        Cmd::Score {
            graph,
            epochs: e,
            learning_rate: lr,
        } => {
            epochs = e;
            learning_rate = lr;
            Command::Score { graph }
        }
        Cmd::Scan { sbom, fixtures } => Command::Scan { sbom, fixtures },
    };
    RunConfig {
        command,
        out: cli.out,
        bins: cli.bins,
        normalized_bc: cli.normalized_bc,
        weights: cli.weights,
        transport: match cli.transport {
            Transport::Live => TransportMode::Live,
            Transport::Fixture => TransportMode::Fixture,
        },
        seed: cli.seed,
        closeness_mode: cli.closeness_mode,
        sample_mode,
        epochs,
        learning_rate,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", usage_record(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    match run(&config(cli)) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("{}", warning_record(w));
            }
            for p in &outcome.written {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_record(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
