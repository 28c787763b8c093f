//! Report documents. Every report serializes to TOML (the report body) and to
//! a tab-separated summary table. Exact fractions are rendered as `"p/q"`
//! strings; 64-bit seeds as decimal strings. Nothing time- or host-dependent
//! enters a report, so identical configurations give byte-identical bodies.

use num_rational::Ratio;
use serde::Serialize;

use super::config::ConfigEcho;
use crate::analysis::EfficiencyResult;

/// Identifier of the report layout.
pub const REPORT_FORMAT: &str = "qshop-report-v1";

/// `p/q`, also for integers (`1/1`).
pub fn frac(r: Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `k/n` count fraction, unreduced so the trial count stays visible.
pub fn count(k: usize, n: usize) -> String {
    format!("{k}/{n}")
}

/// A report that renders to a TOML body and a TSV summary.
pub trait Report: Serialize {
    /// Header row and data rows of the summary table.
    fn summary_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>);

    fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    fn to_tsv(&self) -> String {
        let (header, rows) = self.summary_rows();
        let mut out = header.join("\t");
        out.push('\n');
        for r in rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub command: &'static str,
    pub format: &'static str,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            format: REPORT_FORMAT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyEcho {
    pub eta: String,
    pub eta_q: String,
    pub c: u64,
    pub q: u64,
    pub b: u64,
    pub convention: &'static str,
}

impl From<&EfficiencyResult> for EfficiencyEcho {
    fn from(e: &EfficiencyResult) -> Self {
        Self {
            eta: frac(e.eta),
            eta_q: frac(e.eta_q),
            c: e.c,
            q: e.q,
            b: e.b,
            convention: e.convention,
        }
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateReport {
    pub report: Header,
    pub config: ConfigEcho,
    /// Efficiency of an honest session under this configuration.
    pub efficiency: EfficiencyEcho,
    pub aggregate: Aggregate,
    pub trials: Vec<TrialSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub trials: u64,
    /// Sessions whose decoded message equals the order.
    pub decoded_equals_message: String,
    pub aborted: String,
    /// Wrong bits over all bits of the sessions that completed (0 if none did).
    pub bit_error_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackAggregate {
    pub name: String,
    pub detection_frequency: String,
    /// 95% Wilson interval of the detection frequency.
    pub detection_ci: [f64; 2],
    /// Mean error rate of the checks watching the attack.
    pub mean_leg_error_rate: f64,
    pub leg_error_rate_half_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inferred_equals_message: Option<String>,
    /// Plug-in mutual information (bits per bit) between inferred and true bits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutual_information: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_per_qubit_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub index: u64,
    pub seed: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoded: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wire: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_errors: Option<u64>,
    pub aborted: bool,
    pub events: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<String>,
    pub ledger: LedgerEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort: Option<AbortEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackEcho>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LedgerEcho {
    pub c: u64,
    pub q: u64,
    pub b: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbortEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leg: Option<String>,
    pub check: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackEcho {
    pub detected: bool,
    pub leg_error_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inferred: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_qubit_success: Option<f64>,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), T::to_string)
}

impl Report for SimulateReport {
    fn summary_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "trial",
            "message",
            "decoded",
            "aborted",
            "bit_errors",
            "q",
            "detected",
            "leg_error_rate",
        ];
        let rows = self
            .trials
            .iter()
            .map(|t| {
                vec![
                    t.index.to_string(),
                    t.message.clone(),
                    opt(&t.decoded),
                    t.aborted.to_string(),
                    opt(&t.bit_errors),
                    t.ledger.q.to_string(),
                    opt(&t.attack.as_ref().map(|a| a.detected)),
                    opt(&t.attack.as_ref().map(|a| a.leg_error_rate)),
                ]
            })
            .collect();
        (header, rows)
    }
}

// ------------------------------------------------------------ attack matrix

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixReport {
    pub report: Header,
    pub matrix: MatrixConfig,
    pub cells: Vec<MatrixCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixConfig {
    pub protocols: Vec<String>,
    pub attacks: Vec<String>,
    pub n: u64,
    pub trials: u64,
    pub seed: String,
    pub threshold: f64,
    pub redundant: u64,
    pub sacrificed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCell {
    pub protocol: String,
    pub attack: String,
    pub applicable: bool,
    /// What was observed, e.g. `info=FULL, detected=late`.
    pub observed: String,
    /// The claimed outcome this cell is held to, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim: Option<String>,
    /// `pass`, `fail`, `no claim` or `n/a`.
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_frequency: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_changed: Option<String>,
    /// `FULL`, `PARTIAL`, `NONE`, or `-` when the attack infers nothing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub info: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutual_information: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inferred_bit_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_leg_error_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Report for MatrixReport {
    fn summary_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "protocol",
            "attack",
            "detection",
            "info",
            "observed",
            "claim",
            "verdict",
        ];
        let rows = self
            .cells
            .iter()
            .map(|c| {
                vec![
                    c.protocol.clone(),
                    c.attack.clone(),
                    opt(&c.detection_frequency),
                    opt(&c.info),
                    c.observed.clone(),
                    opt(&c.claim),
                    c.verdict.clone(),
                ]
            })
            .collect();
        (header, rows)
    }
}

// ------------------------------------------------------------ efficiency table

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub report: Header,
    pub table: Table1Meta,
    pub rows: Vec<Table1Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Meta {
    /// Message units of the sessions the ledgers come from.
    pub n: u64,
    pub convention: &'static str,
    pub all_match: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub name: String,
    pub published_eta: String,
    pub published_eta_q: String,
    /// `match`, `mismatch` or `external, not reproduced`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_q: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerEcho>,
}

impl Report for Table1Report {
    fn summary_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let header = vec![
            "protocol",
            "eta",
            "eta_q",
            "published_eta",
            "published_eta_q",
            "status",
        ];
        let rows = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.name.clone(),
                    opt(&r.eta),
                    opt(&r.eta_q),
                    r.published_eta.clone(),
                    r.published_eta_q.clone(),
                    r.status.clone(),
                ]
            })
            .collect();
        (header, rows)
    }
}

// ---------------------------------------------------------------- threshold

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub report: Header,
    pub threshold: ThresholdEcho,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEcho {
    /// Attacked fraction at which Eve's information equals Alice and Bob's.
    pub f_star: f64,
    /// Decoy error rate at `f_star`.
    pub e_star: f64,
    pub residual: f64,
    pub seed: String,
    pub decoys_per_point: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub f: f64,
    /// f / 4
    pub expected_error: f64,
    pub empirical_error: f64,
}

impl Report for ThresholdReport {
    fn summary_rows(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .sweep
            .iter()
            .map(|p| {
                vec![
                    p.f.to_string(),
                    p.expected_error.to_string(),
                    p.empirical_error.to_string(),
                ]
            })
            .collect();
        (vec!["f", "expected_error", "empirical_error"], rows)
    }
}
