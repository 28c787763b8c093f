//! Shared machinery of a protocol run: register, party RNGs, transcript,
//! ledger, the installed attack and abort bookkeeping.

use std::collections::{HashMap, HashSet};

use super::transcript::{CheckKind, Event, Payload, Topic, Transcript};
use super::{
    Abort, Bits, Leg, PartyId, ProtocolKind, ResourceLedger, SessionConfig, SessionOutcome,
};
use crate::adversary::{apply_outsider, Attack, AttackKind, AttackReport, EveNotes};
use crate::error::{Error, Result};
use crate::primitives::{
    verify_decoys, DecoyBatch, DecoyCheck, DecoyPrep, ParticleSequence, Permutation,
};
use crate::qsim::{Ket, QubitId, Register};
use crate::rng::{PartyRngs, RngSeed};

pub(crate) struct Session {
    pub protocol: ProtocolKind,
    pub config: SessionConfig,
    pub reg: Register,
    pub rngs: PartyRngs,
    pub transcript: Transcript,
    pub ledger: ResourceLedger,
    pub attack: Option<Attack>,
    pub notes: EveNotes,
    /// Current state of qubits whose preparation is known (scoring only).
    pub truth: HashMap<QubitId, Ket>,
    /// Bits an attacker inferred and how well, filled in by the runners.
    pub inferred: Option<(Bits, Option<f64>)>,
    sent: HashSet<QubitId>,
    /// Every check so far: leg, kind, error rate, passed.
    checks: Vec<(Leg, CheckKind, f64, bool)>,
    abort: Option<Abort>,
}

impl Session {
    pub fn new(
        protocol: ProtocolKind,
        msg: &Bits,
        config: &SessionConfig,
        attack: Option<&Attack>,
        seed: RngSeed,
    ) -> Result<Self> {
        config.validate(protocol)?;
        protocol.units_for(msg.len())?;
        if let Some(a) = attack {
            a.validate(protocol)?;
        }
        Ok(Self {
            protocol,
            config: *config,
            reg: Register::new(),
            rngs: PartyRngs::new(seed),
            transcript: Transcript::new(),
            ledger: ResourceLedger {
                c: msg.len() as u64,
                q: 0,
                b: 0,
            },
            attack: attack.cloned(),
            notes: EveNotes::default(),
            truth: HashMap::new(),
            inferred: None,
            sent: HashSet::new(),
            checks: Vec::new(),
            abort: None,
        })
    }

    pub fn attack_kind(&self) -> Option<&AttackKind> {
        self.attack.as_ref().map(|a| &a.kind)
    }

    /// Logs a quantum transmission, counts its new qubits and lets an outsider
    /// attack installed on this leg act on it.
    pub fn send(
        &mut self,
        from: PartyId,
        to: PartyId,
        leg: Leg,
        seq: &mut ParticleSequence,
    ) -> Result<()> {
        self.transcript.push(Event::Send {
            from,
            to,
            leg,
            roles: seq.role_string(),
            qubits: seq.qubits().iter().map(|q| q.index()).collect(),
        })?;
        for q in seq.qubits() {
            if self.sent.insert(q) {
                self.ledger.q += 1;
            }
        }
        if let Some(att) = &self.attack {
            if att.kind.is_outsider() && att.leg(self.protocol) == leg {
                apply_outsider(
                    &att.kind,
                    seq,
                    &mut self.reg,
                    &mut self.rngs.eve,
                    &self.truth,
                    &mut self.notes,
                )?;
            }
        }
        Ok(())
    }

    /// Publishes an authenticated announcement; `counted` bits go to the ledger.
    pub fn announce(
        &mut self,
        from: PartyId,
        topic: Topic,
        payload: Payload,
        counted: u64,
    ) -> Result<()> {
        self.ledger.b += counted;
        self.transcript.push(Event::Announce {
            from,
            topic,
            payload,
            authenticated: true,
            counted,
        })
    }

    /// Records a check; a failed check aborts the session. Returns whether it passed.
    pub fn check(&mut self, leg: Leg, kind: CheckKind, result: DecoyCheck) -> Result<bool> {
        let pass = result.rate() <= self.config.threshold;
        self.record(leg, kind, result, pass)
    }

    /// Records a check that tolerates no error at all (outcomes that are
    /// impossible for an honest source).
    pub fn check_exact(&mut self, leg: Leg, kind: CheckKind, result: DecoyCheck) -> Result<bool> {
        self.record(leg, kind, result, result.errors == 0)
    }

    fn record(
        &mut self,
        leg: Leg,
        kind: CheckKind,
        result: DecoyCheck,
        pass: bool,
    ) -> Result<bool> {
        let rate = result.rate();
        self.checks.push((leg, kind, rate, pass));
        self.transcript.push(Event::Check {
            leg,
            kind,
            errors: result.errors,
            checked: result.checked,
            pass,
        })?;
        if !pass && self.abort.is_none() {
            self.abort = Some(Abort {
                leg: Some(leg),
                kind,
                reason: format!(
                    "{} check on {leg} failed: {} errors in {} (rate {:.4}, threshold {})",
                    kind.as_str(),
                    result.errors,
                    result.checked,
                    rate,
                    self.config.threshold
                ),
            });
        }
        Ok(pass)
    }

    /// Discloses the positions (and BB84 states) of `batch`, has `measurer`
    /// verify it and records the check on every leg in `legs`.
    pub fn decoy_check(
        &mut self,
        announcer: PartyId,
        measurer: PartyId,
        legs: &[Leg],
        hosts: &[&ParticleSequence],
        batch: &DecoyBatch,
        kind: CheckKind,
    ) -> Result<bool> {
        let positions: Vec<usize> = (0..hosts.len()).flat_map(|h| batch.positions(h)).collect();
        self.announce(
            announcer,
            Topic::DecoyPositions,
            Payload::Indices(positions),
            0,
        )?;
        let states: Vec<usize> = batch
            .records
            .iter()
            .filter_map(|r| match r.prep {
                DecoyPrep::Bb84(k) => Some(k.code() as usize),
                DecoyPrep::Gv { .. } => None,
            })
            .collect();
        if !states.is_empty() {
            self.announce(announcer, Topic::DecoyStates, Payload::Indices(states), 0)?;
        }
        let result = verify_decoys(hosts, batch, &mut self.reg, self.rngs.get(measurer))?;
        let mut pass = true;
        for &leg in legs {
            pass &= self.check(leg, kind, result)?;
        }
        Ok(pass)
    }

    /// Records Bob's decoded message.
    pub fn decode(&mut self, bits: &Bits) -> Result<()> {
        self.transcript.push(Event::Decode {
            by: PartyId::Bob,
            bits: bits.clone(),
        })
    }

    #[cfg(test)]
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    /// Latest announcement on `topic`; an error if it has not been made yet.
    pub fn disclosed(&self, topic: Topic) -> Result<&Payload> {
        self.transcript.announcement(topic).ok_or_else(|| {
            Error::ProtocolState(format!("{} has not been disclosed", topic.as_str()))
        })
    }

    pub fn disclosed_permutation(&self, topic: Topic) -> Result<Permutation> {
        match self.disclosed(topic)? {
            Payload::Indices(v) => Permutation::new(v.clone()),
            Payload::Bits(_) => Err(Error::ProtocolState(format!(
                "{} is not a permutation",
                topic.as_str()
            ))),
        }
    }

    pub fn disclosed_bits(&self, topic: Topic) -> Result<Bits> {
        match self.disclosed(topic)? {
            Payload::Bits(b) => Ok(b.clone()),
            Payload::Indices(_) => Err(Error::ProtocolState(format!(
                "{} is not a bit string",
                topic.as_str()
            ))),
        }
    }

    pub fn disclosed_indices(&self, topic: Topic) -> Result<Vec<usize>> {
        match self.disclosed(topic)? {
            Payload::Indices(v) => Ok(v.clone()),
            Payload::Bits(_) => Err(Error::ProtocolState(format!(
                "{} is not an index list",
                topic.as_str()
            ))),
        }
    }

    fn report(&self) -> Option<AttackReport> {
        let att = self.attack.as_ref()?;
        let target = att.leg(self.protocol);
        let watched = |leg: Leg, kind: CheckKind| match &att.kind {
            k if k.is_outsider() => {
                leg == target && matches!(kind, CheckKind::Decoy | CheckKind::Redundant)
            }
            AttackKind::CharlieFakeSequence => {
                leg == Leg::AliceBob && matches!(kind, CheckKind::Decoy | CheckKind::Redundant)
            }
            AttackKind::AliceWrongPermutation { .. } => kind == CheckKind::Consistency,
            AttackKind::CharlieWrongState { .. } => {
                matches!(kind, CheckKind::Source | CheckKind::Consistency)
            }
            _ => false,
        };
        let (mut leg_error_rate, mut detected) = (0.0f64, false);
        for &(leg, kind, rate, pass) in &self.checks {
            if watched(leg, kind) {
                leg_error_rate = leg_error_rate.max(rate);
                detected |= !pass;
            }
        }
        let (bits, success) = match &self.inferred {
            Some((b, s)) => (Some(b.clone()), *s),
            None if matches!(att.kind, AttackKind::InterceptResend { .. }) => (
                Some(Bits(self.notes.observed_bits())),
                self.notes.success_rate(),
            ),
            None => (None, None),
        };
        Some(AttackReport {
            attack: att.kind.name(),
            eve_inferred_bits: bits,
            detected,
            leg_error_rate,
            per_qubit_success: success,
        })
    }

    /// Finishes the session. `decoded` is dropped when the session aborted.
    pub fn finish(
        self,
        msg: &Bits,
        decoded: Option<Bits>,
        wire: Option<Bits>,
    ) -> Result<SessionOutcome> {
        let report = self.report();
        let decoded = if self.abort.is_some() { None } else { decoded };
        if self.abort.is_none() && decoded.is_none() {
            return Err(Error::ProtocolState(
                "session finished without abort or decode".into(),
            ));
        }
        Ok(SessionOutcome {
            protocol: self.protocol,
            message: msg.clone(),
            decoded,
            abort: self.abort,
            wire,
            ledger: self.ledger,
            transcript: self.transcript,
            report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::DecoyCheck;

    #[test]
    fn undisclosed_topics_are_protocol_errors() {
        let msg = Bits::zeros(2);
        let s = Session::new(
            ProtocolKind::P2,
            &msg,
            &SessionConfig::default(),
            None,
            RngSeed(1),
        )
        .unwrap();
        assert!(matches!(
            s.disclosed(Topic::ControllerPermutation),
            Err(Error::ProtocolState(_))
        ));
    }

    #[test]
    fn failed_check_aborts_once() {
        let msg = Bits::zeros(2);
        let mut s = Session::new(
            ProtocolKind::Clz,
            &msg,
            &SessionConfig::default(),
            None,
            RngSeed(1),
        )
        .unwrap();
        assert!(s
            .check(
                Leg::AliceBob,
                CheckKind::Decoy,
                DecoyCheck {
                    errors: 0,
                    checked: 4
                }
            )
            .unwrap());
        assert!(!s
            .check(
                Leg::AliceBob,
                CheckKind::Decoy,
                DecoyCheck {
                    errors: 1,
                    checked: 4
                }
            )
            .unwrap());
        assert!(s.aborted());
        let out = s.finish(&msg, Some(msg.clone()), None).unwrap();
        assert!(out.decoded.is_none());
        assert_eq!(out.abort_leg(), Some(Leg::AliceBob));
    }

    #[test]
    fn announcements_feed_the_ledger() {
        let msg = Bits::zeros(3);
        let mut s = Session::new(
            ProtocolKind::Hyj,
            &msg,
            &SessionConfig::default(),
            None,
            RngSeed(1),
        )
        .unwrap();
        s.announce(PartyId::Alice, Topic::Key, Payload::Bits(Bits::zeros(3)), 3)
            .unwrap();
        s.announce(
            PartyId::Alice,
            Topic::DecoyPositions,
            Payload::Indices(vec![1]),
            0,
        )
        .unwrap();
        assert_eq!(s.ledger.b, 3);
        assert_eq!(s.ledger.c, 3);
        assert_eq!(s.disclosed_bits(Topic::Key).unwrap(), Bits::zeros(3));
    }
}
