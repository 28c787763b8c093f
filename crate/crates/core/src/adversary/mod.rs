//! Attack strategies.
//!
//! Outsider attacks (Eve) act on the qubits of one channel leg right after they
//! are sent: intercept-resend, entangle-and-measure, correlation elicitation and
//! the X-flip disturbance. Participant attacks are dishonest behaviors of the
//! legitimate parties that the protocol runners execute at the matching step:
//! Charlie swapping Alice's sequence for a fake one, Alice announcing a changed
//! key or a wrong permutation, Bob decoding before Charlie's disclosure, and
//! Charlie preparing a different GHZ-like state than advertised.

mod outsider;
mod participant;

use std::fmt;

pub use outsider::{
    apply_outsider, correlation_elicitation, entangle_measure, intercept_resend, x_flip_all,
    EveNotes,
};
pub use participant::{
    alice_cheats, charlie_capture, charlie_fake_sequence, charlie_read_captured, CheatVariant,
};

use crate::error::{arg, Result};
use crate::primitives::{GhzLikeSpec, Permutation};
use crate::protocols::{Bits, Leg, ProtocolKind};
use crate::qsim::SingleBasis;

/// Basis Eve measures an intercepted qubit in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisPolicy {
    /// Uniformly random per qubit.
    Random,
    Fixed(SingleBasis),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    /// Measure a uniformly chosen fraction `f` of the leg's qubits and resend
    /// them in the observed state.
    InterceptResend { policy: BasisPolicy, fraction: f64 },
    /// Couple an ancilla √(1−|β|²)|0⟩ + β|1⟩ to every qubit of the leg with a
    /// CNOT (ancilla as control) and keep it.
    EntangleMeasure { beta_sq: f64 },
    /// Pair the leg's qubits at random and measure each pair's parity into an ancilla.
    CorrelationElicitation,
    /// Apply X to every qubit of the leg.
    XFlipAll,
    /// Charlie captures Alice's sequence and forwards a fake one.
    CharlieFakeSequence,
    /// Alice pads with `key` (random when `None`) but announces `announced`.
    AliceKeyChange { key: Option<Bits>, announced: Bits },
    /// Alice announces a wrong permutation (a random different one when `None`).
    AliceWrongPermutation { announced: Option<Permutation> },
    /// Bob tries to decode before Charlie's final disclosure.
    BobPrematureDecode,
    /// Charlie prepares `prepared` instead of the advertised GHZ-like state.
    CharlieWrongState { prepared: GhzLikeSpec },
}

impl AttackKind {
    pub fn is_outsider(&self) -> bool {
        matches!(
            self,
            AttackKind::InterceptResend { .. }
                | AttackKind::EntangleMeasure { .. }
                | AttackKind::CorrelationElicitation
                | AttackKind::XFlipAll
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::InterceptResend { .. } => "intercept-resend",
            AttackKind::EntangleMeasure { .. } => "entangle-measure",
            AttackKind::CorrelationElicitation => "correlation-elicitation",
            AttackKind::XFlipAll => "x-flip",
            AttackKind::CharlieFakeSequence => "charlie-fake-sequence",
            AttackKind::AliceKeyChange { .. } => "alice-key-change",
            AttackKind::AliceWrongPermutation { .. } => "alice-wrong-permutation",
            AttackKind::BobPrematureDecode => "bob-premature-decode",
            AttackKind::CharlieWrongState { .. } => "charlie-wrong-state",
        }
    }

    /// Whether this attack can be mounted against `protocol`.
    pub fn supports(&self, protocol: ProtocolKind) -> Result<()> {
        use ProtocolKind::*;
        let ok = match self {
            k if k.is_outsider() => true,
            AttackKind::CharlieFakeSequence => matches!(protocol, Clz | Hyj | P1),
            AttackKind::AliceKeyChange { .. } => {
                if protocol != Hyj {
                    return arg(format!(
                        "alice-key-change does not apply to {protocol}: no key exists"
                    ));
                }
                true
            }
            AttackKind::AliceWrongPermutation { .. } => matches!(protocol, P1 | P2),
            AttackKind::BobPrematureDecode => matches!(protocol, P2 | P3 | P4),
            AttackKind::CharlieWrongState { .. } => matches!(protocol, P3 | P4),
            _ => unreachable!("outsider kinds handled above"),
        };
        if ok {
            Ok(())
        } else {
            arg(format!("{} does not apply to {protocol}", self.name()))
        }
    }
}

/// Which leg an outsider attack targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TargetLeg {
    /// The leg carrying Alice's encoded qubits (C-B in P3, whose message never travels).
    #[default]
    Default,
    Only(Leg),
}

/// An attack strategy: what to do and where.
#[derive(Debug, Clone, PartialEq)]
pub struct Attack {
    pub kind: AttackKind,
    pub target: TargetLeg,
}

impl Attack {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            target: TargetLeg::Default,
        }
    }

    pub fn on(mut self, leg: Leg) -> Self {
        self.target = TargetLeg::Only(leg);
        self
    }

    pub fn validate(&self, protocol: ProtocolKind) -> Result<()> {
        match &self.kind {
            AttackKind::InterceptResend { fraction, .. } if !(0.0..=1.0).contains(fraction) => {
                return arg(format!("attacked fraction {fraction} outside [0, 1]"));
            }
            AttackKind::EntangleMeasure { beta_sq } if !(0.0..=1.0).contains(beta_sq) => {
                return arg(format!("|beta|^2 = {beta_sq} outside [0, 1]"));
            }
            AttackKind::CharlieWrongState { prepared } => prepared.validate()?,
            _ => {}
        }
        self.kind.supports(protocol)?;
        let leg = self.leg(protocol);
        if !protocol_legs(protocol).contains(&leg) {
            return arg(format!("{protocol} has no {leg} leg"));
        }
        Ok(())
    }

    /// The leg the attack acts on for `protocol`.
    pub fn leg(&self, protocol: ProtocolKind) -> Leg {
        match self.target {
            TargetLeg::Only(l) => l,
            TargetLeg::Default if protocol == ProtocolKind::P3 => Leg::CharlieBob,
            TargetLeg::Default => Leg::AliceBob,
        }
    }
}

/// Quantum legs used by each protocol.
pub fn protocol_legs(protocol: ProtocolKind) -> &'static [Leg] {
    match protocol {
        ProtocolKind::Clz | ProtocolKind::Hyj | ProtocolKind::P1 => {
            &[Leg::CharlieAlice, Leg::AliceBob]
        }
        ProtocolKind::P2 | ProtocolKind::P4 => &[Leg::CharlieAlice, Leg::CharlieBob, Leg::AliceBob],
        ProtocolKind::P3 => &[Leg::CharlieAlice, Leg::CharlieAlice2, Leg::CharlieBob],
    }
}

/// What an attack achieved in one session.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub attack: &'static str,
    /// Bits the attacker ends up holding about the message (when meaningful).
    pub eve_inferred_bits: Option<Bits>,
    /// Whether a check watching the attack failed (and aborted the session).
    pub detected: bool,
    /// Error rate of the check that watches the attack (decoy, redundant,
    /// consistency or source check); 0 when no such check ran.
    pub leg_error_rate: f64,
    /// Fraction of attacked units the attacker inferred correctly.
    pub per_qubit_success: Option<f64>,
}

impl fmt::Display for BasisPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisPolicy::Random => "random",
            BasisPolicy::Fixed(SingleBasis::Computational) => "z",
            BasisPolicy::Fixed(SingleBasis::Diagonal) => "x",
        })
    }
}
