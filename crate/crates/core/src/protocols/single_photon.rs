//! CLZ, HYJ and P1: Charlie prepares random BB84 single photons, Alice checks
//! half of them, LM05-encodes her order on the rest and forwards them to Bob
//! among decoys; Bob reads each bit as "flipped or not" once Charlie discloses
//! the initial states.
//!
//! HYJ pads the order with Alice's key `K` and P1 reorders the encoded qubits
//! with Alice's permutation Πₙ; both secrets are disclosed before Charlie's.

use std::collections::HashMap;

use rand::seq::index;

use super::session::Session;
use super::transcript::{CheckKind, Payload, Topic};
use super::{Bits, Leg, PartyId, ProtocolKind, SessionConfig, SessionOutcome};
use crate::adversary::{charlie_capture, charlie_read_captured, Attack, AttackKind};
use crate::error::{arg, Result};
use crate::primitives::{
    encode_lm05, insert_decoys, insert_redundant, random_bb84_ket, verify_decoys, DecoyBatch,
    DecoyPrep, DecoySubroutine, Particle, ParticleSequence, Permutation, Role,
};
use crate::qsim::{Ket, QubitId, Register};
use crate::rng::{RngSeed, SimRng};

/// Alice's secrets and what she announces about them; `None` entries are
/// drawn at random (key, permutation) or announced honestly.
#[derive(Default)]
struct Secrets<'a> {
    key: Option<&'a Bits>,
    announced_key: Option<&'a Bits>,
    pi: Option<&'a Permutation>,
    announced_pi: Option<&'a Permutation>,
}

/// Runs CLZ on `msg` (one bit per qubit).
pub fn run_clz(
    msg: &Bits,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    run_single(
        ProtocolKind::Clz,
        msg,
        Secrets::default(),
        attack,
        config,
        seed,
    )
}

/// Runs HYJ: Alice sends `M′ = K ⊕ M` and later announces `announced_key`
/// (the key itself unless given or overridden by an installed key-change
/// attack). Bob decodes `announced_key ⊕ M′`.
pub fn run_hyj(
    msg: &Bits,
    key: Option<&Bits>,
    announced_key: Option<&Bits>,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    let secrets = Secrets {
        key,
        announced_key,
        ..Default::default()
    };
    run_single(ProtocolKind::Hyj, msg, secrets, attack, config, seed)
}

/// Runs P1: Alice applies `pi` (random when `None`) to her encoded qubits
/// before inserting decoys and later announces `announced_pi`.
pub fn run_p1(
    msg: &Bits,
    pi: Option<&Permutation>,
    announced_pi: Option<&Permutation>,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    let secrets = Secrets {
        pi,
        announced_pi,
        ..Default::default()
    };
    run_single(ProtocolKind::P1, msg, secrets, attack, config, seed)
}

/// A uniformly random permutation of `n` items different from `pi`.
pub(crate) fn different_permutation(pi: &Permutation, rng: &mut SimRng) -> Result<Permutation> {
    if pi.len() < 2 {
        return arg("a wrong permutation needs at least 2 message qubits");
    }
    loop {
        let p = Permutation::random(pi.len(), rng);
        if &p != pi {
            return Ok(p);
        }
    }
}

fn check_len(what: &str, len: usize, n: usize) -> Result<()> {
    if len != n {
        return arg(format!("{what} has length {len}, expected {n}"));
    }
    Ok(())
}

/// Bob's readout: slot `j` of the message slots holds original qubit
/// `order[j]`, measured in the basis of `initial[order[j]]`. Returns the
/// per-slot bits and the bits in original order.
fn readout(
    reg: &mut Register,
    rng: &mut SimRng,
    slots: &[QubitId],
    order: &Permutation,
    initial: &[Ket],
) -> Result<(Vec<bool>, Vec<bool>)> {
    let mut per_slot = Vec::with_capacity(slots.len());
    let mut decoded = vec![false; slots.len()];
    for (j, &q) in slots.iter().enumerate() {
        let o = order.mapping()[j];
        let k = initial[o];
        let bit = reg.measure(&[q], k.basis().meas(), rng)?.ket() != Some(k);
        per_slot.push(bit);
        decoded[o] = bit;
    }
    Ok((per_slot, decoded))
}

fn run_single(
    protocol: ProtocolKind,
    msg: &Bits,
    secrets: Secrets<'_>,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    let n = msg.len();
    let mut s = Session::new(protocol, msg, config, attack, seed)?;
    for (what, b) in [
        ("key", secrets.key),
        ("announced key", secrets.announced_key),
    ] {
        if let Some(b) = b {
            check_len(what, b.len(), n)?;
        }
    }
    for (what, p) in [
        ("permutation", secrets.pi),
        ("announced permutation", secrets.announced_pi),
    ] {
        if let Some(p) = p {
            check_len(what, p.len(), n)?;
        }
    }

    // Charlie prepares 2n random BB84 qubits and sends them to Alice.
    let kets: Vec<Ket> = (0..2 * n)
        .map(|_| random_bb84_ket(&mut s.rngs.charlie))
        .collect();
    let mut prepared: HashMap<QubitId, Ket> = HashMap::new();
    let qs: Vec<QubitId> = kets
        .iter()
        .map(|&k| {
            let q = s.reg.prepare(k);
            prepared.insert(q, k);
            q
        })
        .collect();
    s.truth.extend(prepared.iter().map(|(&q, &k)| (q, k)));
    let mut ca = ParticleSequence::messages(&qs, "charlie-source");
    s.send(PartyId::Charlie, PartyId::Alice, Leg::CharlieAlice, &mut ca)?;

    // Alice picks n of them for checking; Charlie discloses their states.
    let mut checks = index::sample(&mut s.rngs.alice, 2 * n, n).into_vec();
    checks.sort_unstable();
    s.announce(
        PartyId::Alice,
        Topic::CheckPositions,
        Payload::Indices(checks.clone()),
        0,
    )?;
    let check_kets: Vec<Ket> = checks.iter().map(|&i| kets[i]).collect();
    let codes = check_kets.iter().map(|k| k.code() as usize).collect();
    s.announce(
        PartyId::Charlie,
        Topic::CheckStates,
        Payload::Indices(codes),
        0,
    )?;
    let view = ParticleSequence::from_particles(
        ca.iter()
            .enumerate()
            .map(|(i, p)| {
                let role = if checks.binary_search(&i).is_ok() {
                    Role::Decoy
                } else {
                    Role::Message
                };
                Particle::new(p.qubit(), role, p.origin())
            })
            .collect(),
    );
    let batch = DecoyBatch::bb84_at(0, &checks, &check_kets);
    let result = verify_decoys(&[&view], &batch, &mut s.reg, &mut s.rngs.alice)?;
    if !s.check(Leg::CharlieAlice, CheckKind::Decoy, result)? {
        return s.finish(msg, None, None);
    }
    let (m_qs, m_kets): (Vec<QubitId>, Vec<Ket>) = view
        .iter()
        .zip(&kets)
        .filter(|(p, _)| p.role() == Role::Message)
        .map(|(p, &k)| (p.qubit(), k))
        .unzip();

    // Alice's secrets.
    let (key, announced_key) = match protocol {
        ProtocolKind::Hyj => {
            let (key, announced) = match s.attack_kind() {
                Some(AttackKind::AliceKeyChange { key, announced }) => {
                    (key.clone(), Some(announced.clone()))
                }
                _ => (secrets.key.cloned(), secrets.announced_key.cloned()),
            };
            let key = key.unwrap_or_else(|| Bits::random(n, &mut s.rngs.alice));
            check_len("key", key.len(), n)?;
            let announced = announced.unwrap_or_else(|| key.clone());
            check_len("announced key", announced.len(), n)?;
            (Some(key), Some(announced))
        }
        _ => (None, None),
    };
    let (pi, announced_pi) = match protocol {
        ProtocolKind::P1 => {
            let pi = secrets
                .pi
                .cloned()
                .unwrap_or_else(|| Permutation::random(n, &mut s.rngs.alice));
            let announced = match s.attack_kind().cloned() {
                Some(AttackKind::AliceWrongPermutation { announced: Some(p) }) => p,
                Some(AttackKind::AliceWrongPermutation { announced: None }) => {
                    different_permutation(&pi, &mut s.rngs.alice)?
                }
                _ => secrets.announced_pi.cloned().unwrap_or_else(|| pi.clone()),
            };
            check_len("announced permutation", announced.len(), n)?;
            (pi, announced)
        }
        _ => (Permutation::identity(n), Permutation::identity(n)),
    };

    // Encoding.
    let payload = match &key {
        Some(k) => msg.xor(k)?,
        None => msg.clone(),
    };
    for ((&q, &k), &bit) in m_qs.iter().zip(&m_kets).zip(payload.as_slice()) {
        s.reg.apply_single(q, encode_lm05(bit))?;
        if bit {
            s.truth.insert(q, k.flipped());
        }
    }
    let travel = pi.apply(&m_qs)?;
    let wire = Bits(pi.apply(payload.as_slice())?);

    // Decoys and optional redundant qubits, then the A-B transmission.
    let msg_seq = ParticleSequence::messages(&travel, "alice-encoded");
    let (with_decoys, mut decoys) = insert_decoys(
        &msg_seq,
        0,
        DecoySubroutine::Bb84,
        n,
        &mut s.reg,
        &mut s.rngs.alice,
    );
    for r in &decoys.records {
        if let DecoyPrep::Bb84(k) = r.prep {
            s.truth
                .insert(with_decoys.particles()[r.slot.position].qubit(), k);
        }
    }
    let (mut ab, redundant) = insert_redundant(
        &with_decoys,
        0,
        config.redundant,
        &mut s.reg,
        &mut s.rngs.alice,
    );
    decoys.reindex(0, &with_decoys, &ab)?;
    s.send(PartyId::Alice, PartyId::Bob, Leg::AliceBob, &mut ab)?;
    let captured = match s.attack_kind() {
        Some(AttackKind::CharlieFakeSequence) => {
            Some(charlie_capture(&mut ab, &mut s.reg, &mut s.rngs.charlie)?)
        }
        _ => None,
    };

    // Eavesdropping checks on A-B.
    let mut ok = s.decoy_check(
        PartyId::Alice,
        PartyId::Bob,
        &[Leg::AliceBob],
        &[&ab],
        &decoys,
        CheckKind::Decoy,
    )?;
    if ok && !redundant.is_empty() {
        ok = s.decoy_check(
            PartyId::Alice,
            PartyId::Bob,
            &[Leg::AliceBob],
            &[&ab],
            &redundant,
            CheckKind::Redundant,
        )?;
    }
    if let Some(captured) = &captured {
        let mut skip = decoys.positions(0);
        skip.extend(redundant.positions(0));
        let bits =
            charlie_read_captured(captured, &skip, &prepared, &mut s.reg, &mut s.rngs.charlie)?;
        let agree = n - bits.hamming(msg)?;
        s.inferred = Some((bits, Some(agree as f64 / n as f64)));
    }
    if !ok {
        return s.finish(msg, None, Some(wire));
    }

    // Disclosures: Alice's secret first, then Charlie's initial states.
    if let Some(k) = &announced_key {
        s.announce(
            PartyId::Alice,
            Topic::Key,
            Payload::Bits(k.clone()),
            n as u64,
        )?;
    }
    if protocol == ProtocolKind::P1 {
        s.announce(
            PartyId::Alice,
            Topic::Permutation,
            Payload::Indices(announced_pi.mapping().to_vec()),
            n as u64,
        )?;
    }
    let codes = m_kets.iter().map(|k| k.code() as usize).collect();
    s.announce(
        PartyId::Charlie,
        Topic::InitialStates,
        Payload::Indices(codes),
        n as u64,
    )?;

    // Bob's readout uses only what was disclosed.
    let initial = s
        .disclosed_indices(Topic::InitialStates)?
        .into_iter()
        .map(|c| Ket::from_code(c as u8))
        .collect::<Result<Vec<Ket>>>()?;
    let order = match protocol {
        ProtocolKind::P1 => s.disclosed_permutation(Topic::Permutation)?,
        _ => Permutation::identity(n),
    };
    let slots = ab.message_qubits();
    let referee = (protocol == ProtocolKind::P1).then(|| (s.reg.clone(), s.rngs.bob.clone()));
    let (per_slot, received) = readout(&mut s.reg, &mut s.rngs.bob, &slots, &order, &initial)?;
    if let Some((mut reg, mut rng)) = referee {
        // What Bob would have read had Alice announced the order she used.
        let (honest, _) = readout(&mut reg, &mut rng, &slots, &pi, &initial)?;
        let errors = honest.iter().zip(&per_slot).filter(|(a, b)| a != b).count();
        let result = crate::primitives::DecoyCheck { errors, checked: n };
        if !s.check(Leg::AliceBob, CheckKind::Consistency, result)? {
            return s.finish(msg, None, Some(wire));
        }
    }
    let decoded = match protocol {
        ProtocolKind::Hyj => Bits(received).xor(&s.disclosed_bits(Topic::Key)?)?,
        _ => Bits(received),
    };
    s.decode(&decoded)?;
    s.finish(msg, Some(decoded), Some(wire))
}
