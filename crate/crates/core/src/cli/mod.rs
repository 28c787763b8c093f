//! Command-line front end.
//!
//! ```text
//! qshop simulate --protocol hyj --n 6 --message 100101 --seed 7
//! qshop simulate --protocol hyj --message 100101 --attack alice-key-change:K=010010,Kp=001011
//! qshop attack-matrix --protocols clz,hyj,p1 --attack charlie-fake-sequence --trials 200
//! qshop table1
//! qshop threshold --decoys 10000
//! ```
//!
//! Reports go to standard output or `--out`; `--summary` adds a TSV table.
//! The default seed can be set with `QSHOP_SEED`. Exit status: 0 when the
//! command ran (aborted sessions are data), 1 on a usage error, 2 on an
//! internal invariant violation.

mod commands;
mod config;
mod report;
mod spec;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{
    cmd_attack_matrix, cmd_simulate, cmd_table1, cmd_threshold, MatrixOptions, PublishedRow,
    NO_INFORMATION_MI, PREMATURE_ALPHA, TABLE1_PUBLISHED, TABLE1_UNITS,
    WRONG_PERMUTATION_DETECTION,
};
pub use config::{ConfigEcho, RunConfig, DEFAULT_UNITS};
pub use report::{
    Aggregate, AttackAggregate, MatrixCell, MatrixReport, Report, SimulateReport, Table1Report,
    Table1Row, ThresholdReport, TrialSummary, REPORT_FORMAT,
};
pub use spec::{AttackSpec, MessageSpec, SpecKind, ATTACK_NAMES};

use crate::error::Error;
use crate::primitives::{DecoySubroutine, GvPlacement};
use crate::protocols::{ProtocolKind, DEFAULT_THRESHOLD};

/// Environment variable that overrides the default seed.
pub const SEED_ENV: &str = "QSHOP_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Sim(#[from] Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("cannot render report: {0}")]
    Render(#[from] toml::ser::Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for anything the user can fix, 2 for internal invariant violations.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Sim(Error::Argument(_)) => 1,
            CliError::Sim(_) | CliError::Render(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qshop",
    version,
    about = "Simulate controlled quantum online-shopping protocols, their attacks and their qubit efficiency"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run sessions of one protocol, optionally under attack.
    Simulate(SimulateArgs),
    /// Run every protocol against every attack and compare with the claimed outcomes.
    AttackMatrix(MatrixArgs),
    /// Recompute the qubit-efficiency comparison table.
    Table1(OutputArgs),
    /// Solve for the intercept-resend threshold and sweep the decoy error rate.
    Threshold(ThresholdArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a tab-separated summary table here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// clz, hyj, p1, p2, p3 or p4.
    #[arg(long, required_unless_present = "config")]
    protocol: Option<ProtocolKind>,
    /// Message units (qubits, pairs or triples); inferred from a fixed message.
    #[arg(long)]
    n: Option<usize>,
    /// Bit string, or "random" for a fresh order per trial.
    #[arg(long)]
    message: Option<MessageSpec>,
    /// Attack spec, e.g. intercept-resend:f=0.5 or alice-key-change:K=010010,Kp=001011.
    #[arg(long)]
    attack: Option<AttackSpec>,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// A check fails when its error rate exceeds this value.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// bb84 or gv, where the protocol permits.
    #[arg(long)]
    decoy_mode: Option<DecoySubroutine>,
    /// whole-pair or split-pair GV decoys.
    #[arg(long)]
    gv_placement: Option<GvPlacement>,
    /// Redundant computational-basis qubits added to Alice's sequence.
    #[arg(long)]
    redundant: Option<usize>,
    /// GHZ-like triples sacrificed to verify Charlie's source (p3, p4).
    #[arg(long)]
    sacrificed: Option<usize>,
    /// Re-run the configuration of an earlier report (or a bare config table);
    /// its seed is used.
    #[arg(long, conflicts_with_all = [
        "protocol", "n", "message", "attack", "threshold", "trials",
        "decoy_mode", "gv_placement", "redundant", "sacrificed",
    ])]
    config: Option<PathBuf>,
    /// Write each trial's transcript into this directory.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Comma-separated protocols (default: all six).
    #[arg(long, value_delimiter = ',')]
    protocols: Vec<ProtocolKind>,
    /// Attack spec; repeat for several (default: every attack with default parameters).
    #[arg(long = "attack")]
    attacks: Vec<AttackSpec>,
    #[arg(long, default_value_t = DEFAULT_UNITS)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    redundant: usize,
    #[arg(long, default_value_t = 0)]
    sacrificed: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// BB84 decoys per sweep point.
    #[arg(long, default_value_t = 10_000)]
    decoys: usize,
    /// Evenly spaced attacked fractions in [0, 1].
    #[arg(long, default_value_t = 11)]
    points: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

impl SimulateArgs {
    fn run_config(&self) -> Result<RunConfig, CliError> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            return Ok(RunConfig::from_toml(&text)?);
        }
        let protocol = self
            .protocol
            .ok_or_else(|| CliError::Usage("--protocol is required".into()))?;
        let message = self.message.clone().unwrap_or(MessageSpec::Random);
        let n = config::units_for_message(protocol, self.n, &message)?;
        let defaults = RunConfig::new(protocol, n);
        let cfg = RunConfig {
            message,
            attack: self.attack.clone(),
            seed: self.seed,
            threshold: self.threshold.unwrap_or(defaults.threshold),
            trials: self.trials.unwrap_or(defaults.trials),
            decoy_mode: self.decoy_mode.unwrap_or(defaults.decoy_mode),
            gv_placement: self.gv_placement.unwrap_or(defaults.gv_placement),
            redundant: self.redundant.unwrap_or(0),
            sacrificed: self.sacrificed.unwrap_or(0),
            ..defaults
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit<R: Report>(report: &R, output: &OutputArgs) -> Result<(), CliError> {
    let body = report.to_toml()?;
    match &output.out {
        Some(path) => fs::write(path, &body).map_err(|e| CliError::io(path, e))?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    if let Some(path) = &output.summary {
        fs::write(path, report.to_tsv()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

fn default_attacks() -> Vec<AttackSpec> {
    ATTACK_NAMES
        .iter()
        .map(|n| n.parse().expect("bare attack names parse"))
        .collect()
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(args) => {
            let cfg = args.run_config()?;
            let report = cmd_simulate(&cfg, args.transcripts.as_deref())?;
            emit(&report, &args.output)
        }
        Command::AttackMatrix(args) => {
            let opts = MatrixOptions {
                protocols: if args.protocols.is_empty() {
                    ProtocolKind::ALL.to_vec()
                } else {
                    args.protocols
                },
                attacks: if args.attacks.is_empty() {
                    default_attacks()
                } else {
                    args.attacks
                },
                n: args.n,
                trials: args.trials,
                seed: args.seed,
                threshold: args.threshold,
                redundant: args.redundant,
                sacrificed: args.sacrificed,
            };
            if opts.n == 0 || opts.trials == 0 {
                return Err(CliError::Usage(
                    "--n and --trials must be at least 1".into(),
                ));
            }
            emit(&cmd_attack_matrix(&opts)?, &args.output)
        }
        Command::Table1(output) => emit(&cmd_table1()?, &output),
        Command::Threshold(args) => emit(
            &cmd_threshold(args.decoys, args.points, args.seed)?,
            &args.output,
        ),
    }
}

/// Parses the process arguments, runs the command and maps the result to an
/// exit status.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qshop: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
