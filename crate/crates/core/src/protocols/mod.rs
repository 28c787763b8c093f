//! The six online-shopping protocols as sequential state machines.
//!
//! | protocol | carrier | encoding | controller's lever |
//! |---|---|---|---|
//! | CLZ | single photons | I / iY | initial states |
//! | HYJ | single photons + one-time pad | I / iY | initial states |
//! | P1 | single photons + secret permutation | I / iY | initial states |
//! | P2 | Bell pairs | dense coding | permutation of Bob's halves |
//! | P3 | GHZ-like triples, entanglement swapping | I / Z | permutation of qubit 3 |
//! | P4 | GHZ-like triples, dense coding | dense coding | retained qubit 3 |
//!
//! Every run owns a fresh [`Register`](crate::qsim::Register), one RNG stream
//! per party, a [`Transcript`] and a [`ResourceLedger`].
//!
//! Resource accounting (`c` message bits, `q` qubits, `b` classical bits):
//!
//! * `q` counts every distinct qubit that enters a channel, decoys included,
//!   plus the qubits Charlie keeps in P4. Alice's local pairs in P3 never travel
//!   and are not counted.
//! * `b` counts the classical disclosures needed to read the message, `n` bits
//!   per disclosure over `n` message units: Charlie's initial states (CLZ, HYJ,
//!   P1), Alice's key (HYJ), each permutation (P1: Alice; P2: Charlie and Alice;
//!   P3: Charlie), Alice's same/different bits (P3), and Charlie's family bits,
//!   qubit-3 outcomes plus Alice's permutation (P4). Check-related
//!   announcements (decoy positions and states) count zero.
//!
//! With these rules the ledgers give η = c/(q+b) and η_q = c/q of 1/4 and 1/3
//! (CLZ), 1/5 and 1/3 (HYJ, P1), 2/7 and 2/5 (P2), 1/8 and 1/6 (P3), 2/9 and
//! 1/3 (P4) for even `n`. The convention is identified in reports by
//! [`LEDGER_CONVENTION`].

mod bell;
mod ghz;
mod session;
mod single_photon;
mod transcript;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use bell::run_p2;
pub use ghz::{decode_swap, run_p3, run_p4, swap_relation};
pub use single_photon::{run_clz, run_hyj, run_p1};
pub use transcript::{CheckKind, Event, Payload, Topic, Transcript};

use crate::adversary::{Attack, AttackReport};
use crate::error::{arg, Error, Result};
use crate::primitives::{DecoySubroutine, GhzLikeSpec, GvPlacement};
use crate::rng::RngSeed;

/// Identifier of the resource-accounting convention used by every ledger.
pub const LEDGER_CONVENTION: &str = "channel-qubits+disclosures-v1";

/// Default abort threshold on a check's error rate.
pub const DEFAULT_THRESHOLD: f64 = 0.17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartyId {
    Alice,
    Bob,
    Charlie,
    Eve,
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for PartyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Alice" => Ok(Self::Alice),
            "Bob" => Ok(Self::Bob),
            "Charlie" => Ok(Self::Charlie),
            "Eve" => Ok(Self::Eve),
            other => arg(format!("unknown party {other:?}")),
        }
    }
}

/// A quantum channel between two parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leg {
    /// Charlie to Alice (the only such leg, or the first of two in P3).
    CharlieAlice,
    /// Second Charlie-to-Alice string in P3.
    CharlieAlice2,
    CharlieBob,
    AliceBob,
}

impl Leg {
    pub const ALL: [Leg; 4] = [
        Leg::CharlieAlice,
        Leg::CharlieAlice2,
        Leg::CharlieBob,
        Leg::AliceBob,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Leg::CharlieAlice => "C-A",
            Leg::CharlieAlice2 => "C-A2",
            Leg::CharlieBob => "C-B",
            Leg::AliceBob => "A-B",
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Leg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Leg::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown leg {s:?} (expected C-A, C-A2, C-B or A-B)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolKind {
    Clz,
    Hyj,
    P1,
    P2,
    P3,
    P4,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 6] = [
        ProtocolKind::Clz,
        ProtocolKind::Hyj,
        ProtocolKind::P1,
        ProtocolKind::P2,
        ProtocolKind::P3,
        ProtocolKind::P4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Clz => "clz",
            ProtocolKind::Hyj => "hyj",
            ProtocolKind::P1 => "p1",
            ProtocolKind::P2 => "p2",
            ProtocolKind::P3 => "p3",
            ProtocolKind::P4 => "p4",
        }
    }

    /// Message bits carried per message unit (per qubit, pair or triple).
    pub fn bits_per_unit(self) -> usize {
        match self {
            ProtocolKind::P2 | ProtocolKind::P4 => 2,
            _ => 1,
        }
    }

    /// Number of message units needed for a message of `bits` bits.
    pub fn units_for(self, bits: usize) -> Result<usize> {
        let k = self.bits_per_unit();
        if bits == 0 || !bits.is_multiple_of(k) {
            return arg(format!(
                "{self} needs a non-empty message whose length is a multiple of {k}, got {bits}"
            ));
        }
        Ok(bits / k)
    }

    pub fn default_decoys(self) -> DecoySubroutine {
        match self {
            ProtocolKind::P2 => DecoySubroutine::Gv,
            _ => DecoySubroutine::Bb84,
        }
    }

    pub fn allows_decoys(self, d: DecoySubroutine) -> bool {
        match self {
            ProtocolKind::Clz | ProtocolKind::Hyj | ProtocolKind::P1 => d == DecoySubroutine::Bb84,
            ProtocolKind::P2 => d == DecoySubroutine::Gv,
            ProtocolKind::P3 | ProtocolKind::P4 => true,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProtocolKind::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown protocol {s:?} (expected clz, hyj, p1, p2, p3 or p4)"
                ))
            })
    }
}

/// A classical bit string (the shopping message, keys, announcements).
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bits(pub Vec<bool>);

/// Alice's order: customer id, items and quantities as an opaque bit string.
pub type ShoppingMessage = Bits;

impl Bits {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Bits {
        Bits((0..n).map(|_| rng.random()).collect())
    }

    pub fn zeros(n: usize) -> Bits {
        Bits(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn xor(&self, other: &Bits) -> Result<Bits> {
        if self.len() != other.len() {
            return arg(format!(
                "cannot xor {} bits with {} bits",
                self.len(),
                other.len()
            ));
        }
        Ok(Bits(
            self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect(),
        ))
    }

    /// Number of positions where the two strings differ.
    pub fn hamming(&self, other: &Bits) -> Result<usize> {
        Ok(self.xor(other)?.0.iter().filter(|&&b| b).count())
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0
            .iter()
            .try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits({self})")
    }
}

impl FromStr for Bits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => arg(format!("bit strings contain only 0 and 1, found {other:?}")),
            })
            .collect::<Result<Vec<bool>>>()
            .map(Bits)
    }
}

impl From<Vec<bool>> for Bits {
    fn from(v: Vec<bool>) -> Self {
        Bits(v)
    }
}

/// Resource counters of one session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ResourceLedger {
    /// Message bits delivered.
    pub c: u64,
    /// Qubits that entered a channel (plus Charlie's retained qubits in P4).
    pub q: u64,
    /// Classical bits of non-check announcements.
    pub b: u64,
}

/// Tunable session parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    /// A check fails when its error rate exceeds this value.
    pub threshold: f64,
    /// Decoy subroutine; `None` picks the protocol default (GV for P2, BB84 otherwise).
    pub decoy_mode: Option<DecoySubroutine>,
    pub gv_placement: GvPlacement,
    /// Redundant computational-basis qubits Alice adds to her A-B sequence.
    pub redundant: usize,
    /// GHZ-like triples sacrificed to verify Charlie's source (P3, P4).
    pub sacrificed: usize,
    /// The GHZ-like state Charlie advertises (P3, P4).
    pub ghz: GhzLikeSpec,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            decoy_mode: None,
            gv_placement: GvPlacement::WholePair,
            redundant: 0,
            sacrificed: 0,
            ghz: GhzLikeSpec::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self, protocol: ProtocolKind) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return arg(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if let Some(d) = self.decoy_mode {
            if !protocol.allows_decoys(d) {
                return arg(format!("{protocol} does not support {d} decoys"));
            }
        }
        self.ghz.validate()
    }

    pub fn decoys_for(&self, protocol: ProtocolKind) -> DecoySubroutine {
        self.decoy_mode.unwrap_or(protocol.default_decoys())
    }
}

/// Why a session stopped before Bob decoded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abort {
    pub leg: Option<Leg>,
    pub kind: CheckKind,
    pub reason: String,
}

/// Everything a session produced.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub protocol: ProtocolKind,
    pub message: Bits,
    /// Bob's decoded message; `None` when the session aborted.
    pub decoded: Option<Bits>,
    pub abort: Option<Abort>,
    /// Bit string physically encoded on the A-B message qubits, in travel order
    /// (single-photon protocols only).
    pub wire: Option<Bits>,
    pub ledger: ResourceLedger,
    pub transcript: Transcript,
    /// Filled in when an attack was installed.
    pub report: Option<AttackReport>,
}

impl SessionOutcome {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    pub fn abort_leg(&self) -> Option<Leg> {
        self.abort.as_ref().and_then(|a| a.leg)
    }

    pub fn succeeded(&self) -> bool {
        self.decoded.as_ref() == Some(&self.message)
    }
}

/// Runs `protocol` with default secrets (random keys and permutations).
/// Participant attacks that carry their own parameters (a changed key, a wrong
/// permutation) are honored.
pub fn run(
    protocol: ProtocolKind,
    msg: &Bits,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    match protocol {
        ProtocolKind::Clz => run_clz(msg, attack, config, seed),
        ProtocolKind::Hyj => run_hyj(msg, None, None, attack, config, seed),
        ProtocolKind::P1 => run_p1(msg, None, None, attack, config, seed),
        ProtocolKind::P2 => run_p2(msg, None, attack, config, seed),
        ProtocolKind::P3 => run_p3(msg, None, attack, config, seed),
        ProtocolKind::P4 => run_p4(msg, attack, config, seed),
    }
}
