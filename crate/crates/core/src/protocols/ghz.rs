//! P3 and P4: protocols built on GHZ-like triples
//! (1/√2)(|ψ₁⟩₁₂|a⟩₃ ± |ψ₂⟩₁₂|b⟩₃).
//!
//! * P3 sends qubits 1 and 2 to Alice and the permuted qubits 3 to Bob. Alice
//!   Z-encodes her bit on one half of a local ψ+ pair and swaps entanglement
//!   with Bell measurements on (A₁, 1) and (A₂, 2); her two outcomes are the
//!   same or differ by sign, and she announces only that relation. Bob reads
//!   qubit 3 and flips it when the relation says "different", once Charlie
//!   discloses Πₙ. The encoded qubits never travel.
//! * P4 sends qubit 1 to Alice and qubit 2 to Bob while Charlie keeps qubit 3.
//!   Alice dense-codes on qubit 1 and forwards it; Bob Bell-measures
//!   (1, 2) but needs Charlie's family bit and qubit-3 outcome to know which
//!   Bell state the pair started in.

use rand::Rng;

use super::session::Session;
use super::transcript::{CheckKind, Payload, Topic};
use super::{Bits, Leg, PartyId, ProtocolKind, SessionConfig, SessionOutcome};
use crate::adversary::{Attack, AttackKind};
use crate::error::{arg, Error, Result};
use crate::primitives::{
    apply_permutation, decode_dense, dibits, encode_dense, encode_z, insert_decoys,
    insert_redundant, insert_split_gv, make_bell, make_ghz_like, DecoyBatch, DecoyCheck,
    DecoySubroutine, GhzLikeSpec, GvPlacement, ParticleSequence, Permutation,
};
use crate::qsim::{BellKind, MeasBasis, QubitId};
use crate::rng::RngSeed;

/// Relation between Alice's two Bell outcomes in entanglement swapping:
/// `false` when identical, `true` when they share the letter (ψ or φ) but not
/// the sign. Outcomes of different letters have zero amplitude.
pub fn swap_relation(o1: BellKind, o2: BellKind) -> Result<bool> {
    if o1 == o2 {
        Ok(false)
    } else if o1.is_psi() == o2.is_psi() {
        Ok(true)
    } else {
        Err(Error::ImpossibleOutcome(format!(
            "swapping cannot yield {o1} with {o2}"
        )))
    }
}

/// Message bit from Alice's outcomes and Bob's qubit-3 bit (1 when found in |b⟩):
/// identical outcomes return `bob_bit`, same-letter opposite-sign outcomes its
/// complement.
pub fn decode_swap(o1: BellKind, o2: BellKind, bob_bit: bool) -> Result<bool> {
    Ok(bob_bit ^ swap_relation(o1, o2)?)
}

/// The GHZ-like state Charlie actually prepares.
fn prepared_spec(s: &Session, advertised: GhzLikeSpec) -> GhzLikeSpec {
    match s.attack_kind() {
        Some(AttackKind::CharlieWrongState { prepared }) => *prepared,
        _ => advertised,
    }
}

/// Sacrifices `config.sacrificed` triples: qubit 3 is measured in the
/// advertised third basis and qubits 1, 2 in the Bell basis; a triple fails
/// when the Bell outcome is not the one the advertised state predicts.
fn source_check(s: &mut Session, advertised: &GhzLikeSpec, prepared: &GhzLikeSpec) -> Result<bool> {
    let k = s.config.sacrificed;
    if k == 0 {
        return Ok(true);
    }
    let mut result = DecoyCheck::default();
    for _ in 0..k {
        let [q1, q2, q3] = make_ghz_like(prepared, &mut s.reg)?;
        s.ledger.q += 3;
        let o3 = s
            .reg
            .measure(&[q3], advertised.third_basis().meas(), &mut s.rngs.bob)?;
        let expected = advertised.bell_given(o3.ket() == Some(advertised.a));
        let o12 = s
            .reg
            .measure(&[q1, q2], MeasBasis::Bell, &mut s.rngs.alice)?;
        result.checked += 1;
        if o12.bell() != Some(expected) {
            result.errors += 1;
        }
    }
    s.check(Leg::CharlieBob, CheckKind::Source, result)
}

fn bell_kind(o: crate::qsim::Outcome) -> BellKind {
    o.bell().expect("Bell measurement yields a Bell outcome")
}

/// Runs P3 on an `n`-bit message with Charlie's permutation `pi` (random when
/// `None`). P3 always advertises the default GHZ-like state.
pub fn run_p3(
    msg: &Bits,
    pi: Option<&Permutation>,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    let protocol = ProtocolKind::P3;
    let advertised = GhzLikeSpec::default();
    if config.ghz != advertised {
        return arg(format!(
            "{protocol} uses the GHZ-like state {advertised}; other states are not supported"
        ));
    }
    let mode = config.decoys_for(protocol);
    if mode == DecoySubroutine::Gv && config.gv_placement == GvPlacement::SplitPair {
        return arg(format!("{protocol} supports only whole-pair GV decoys"));
    }
    let mut s = Session::new(protocol, msg, config, attack, seed)?;
    let n = msg.len();
    if pi.is_some_and(|p| p.len() != n) {
        return arg(format!("{protocol} permutation must have length {n}"));
    }
    let prepared = prepared_spec(&s, advertised);
    if !source_check(&mut s, &advertised, &prepared)? {
        return s.finish(msg, None, None);
    }

    // Charlie: n triples; qubits 1 and 2 to Alice, permuted qubits 3 to Bob.
    let pi = match pi {
        Some(p) => p.clone(),
        None => Permutation::random(n, &mut s.rngs.charlie),
    };
    let triples = (0..n)
        .map(|_| make_ghz_like(&prepared, &mut s.reg))
        .collect::<Result<Vec<_>>>()?;
    let column = |j: usize, origin| {
        ParticleSequence::messages(&triples.iter().map(|t| t[j]).collect::<Vec<_>>(), origin)
    };
    let p1 = column(0, "ghz-1");
    let p2 = column(1, "ghz-2");
    let p3 = apply_permutation(&column(2, "ghz-3"), &pi)?;
    let mut legs = Vec::new();
    for (seq, leg, to) in [
        (p1, Leg::CharlieAlice, PartyId::Alice),
        (p2, Leg::CharlieAlice2, PartyId::Alice),
        (p3, Leg::CharlieBob, PartyId::Bob),
    ] {
        let (mut out, batch) = insert_decoys(&seq, 0, mode, n, &mut s.reg, &mut s.rngs.charlie);
        s.send(PartyId::Charlie, to, leg, &mut out)?;
        legs.push((out, leg, to, batch));
    }
    for (seq, leg, to, batch) in &legs {
        if !s.decoy_check(
            PartyId::Charlie,
            *to,
            &[*leg],
            &[seq],
            batch,
            CheckKind::Decoy,
        )? {
            return s.finish(msg, None, None);
        }
    }
    let r1 = legs[0].0.message_qubits();
    let r2 = legs[1].0.message_qubits();
    let r3 = legs[2].0.message_qubits();

    // Alice: local ψ+ pair, Z-encoding, two Bell measurements.
    let mut relation = Vec::with_capacity(n);
    let mut impossible = 0;
    for i in 0..n {
        let (x, y) = make_bell(BellKind::PsiPlus, &mut s.reg);
        s.reg.apply_single(x, encode_z(msg.as_slice()[i]))?;
        let o1 = bell_kind(
            s.reg
                .measure(&[x, r1[i]], MeasBasis::Bell, &mut s.rngs.alice)?,
        );
        let o2 = bell_kind(
            s.reg
                .measure(&[y, r2[i]], MeasBasis::Bell, &mut s.rngs.alice)?,
        );
        match swap_relation(o1, o2) {
            Ok(r) => relation.push(r),
            Err(_) => {
                impossible += 1;
                relation.push(false);
            }
        }
    }
    if !s.check_exact(
        Leg::CharlieAlice,
        CheckKind::Consistency,
        DecoyCheck {
            errors: impossible,
            checked: n,
        },
    )? {
        return s.finish(msg, None, None);
    }
    s.announce(
        PartyId::Alice,
        Topic::Relation,
        Payload::Bits(Bits(relation)),
        n as u64,
    )?;

    // Bob reads his qubits 3 (still in Charlie's order).
    let basis = advertised.third_basis();
    let mut bob_raw = Vec::with_capacity(n);
    for &q in &r3 {
        bob_raw
            .push(s.reg.measure(&[q], basis.meas(), &mut s.rngs.bob)?.ket() == Some(advertised.b));
    }
    let rel = s.disclosed_bits(Topic::Relation)?;
    if matches!(s.attack_kind(), Some(AttackKind::BobPrematureDecode)) {
        let guess = Permutation::random(n, &mut s.rngs.bob);
        let bits: Vec<bool> = guess
            .unapply(&bob_raw)?
            .iter()
            .zip(rel.as_slice())
            .map(|(b, r)| b ^ r)
            .collect();
        let bits = Bits(bits);
        let agree = n - bits.hamming(msg)?;
        s.inferred = Some((bits, Some(agree as f64 / n as f64)));
    }

    // Charlie discloses Πₙ; Bob aligns his bits with Alice's relations.
    s.announce(
        PartyId::Charlie,
        Topic::ControllerPermutation,
        Payload::Indices(pi.mapping().to_vec()),
        n as u64,
    )?;
    let pi_d = s.disclosed_permutation(Topic::ControllerPermutation)?;
    let decoded = Bits(
        pi_d.unapply(&bob_raw)?
            .iter()
            .zip(rel.as_slice())
            .map(|(b, r)| b ^ r)
            .collect(),
    );
    s.decode(&decoded)?;
    s.finish(msg, Some(decoded), None)
}

/// Inserts the configured decoys into two sequences headed to different
/// receivers. Returns the sequences and the batches with their measurers and legs.
#[allow(clippy::type_complexity)]
fn decoy_pair(
    s: &mut Session,
    a: &ParticleSequence,
    b: &ParticleSequence,
    n: usize,
) -> (
    ParticleSequence,
    ParticleSequence,
    Vec<(PartyId, Vec<Leg>, DecoyBatch)>,
) {
    let mode = s.config.decoys_for(s.protocol);
    if mode == DecoySubroutine::Gv && s.config.gv_placement == GvPlacement::SplitPair {
        let (ca, cb, d) = insert_split_gv(a, b, (0, 1), n, &mut s.reg, &mut s.rngs.charlie);
        return (
            ca,
            cb,
            vec![(PartyId::Alice, vec![Leg::CharlieAlice, Leg::CharlieBob], d)],
        );
    }
    let (ca, da) = insert_decoys(a, 0, mode, n, &mut s.reg, &mut s.rngs.charlie);
    let (cb, db) = insert_decoys(b, 1, mode, n, &mut s.reg, &mut s.rngs.charlie);
    (
        ca,
        cb,
        vec![
            (PartyId::Alice, vec![Leg::CharlieAlice], da),
            (PartyId::Bob, vec![Leg::CharlieBob], db),
        ],
    )
}

/// Runs P4 on a `2n`-bit message with the GHZ-like family advertised in
/// `config.ghz`. Each triple is drawn from that state or the one with ψ₁ and
/// ψ₂ exchanged, according to Charlie's secret family bit.
pub fn run_p4(
    msg: &Bits,
    attack: Option<&Attack>,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    let protocol = ProtocolKind::P4;
    let mut s = Session::new(protocol, msg, config, attack, seed)?;
    let n = protocol.units_for(msg.len())?;
    let advertised = config.ghz;
    let prepared = prepared_spec(&s, advertised);
    if !source_check(&mut s, &advertised, &prepared)? {
        return s.finish(msg, None, None);
    }

    // Charlie: n triples, qubit 1 to Alice, qubit 2 to Bob, qubit 3 kept.
    let family: Vec<bool> = (0..n).map(|_| s.rngs.charlie.random()).collect();
    let mut triples: Vec<[QubitId; 3]> = Vec::with_capacity(n);
    for &r in &family {
        let spec = if r { prepared.swapped() } else { prepared };
        triples.push(make_ghz_like(&spec, &mut s.reg)?);
    }
    s.ledger.q += n as u64;
    let pa = ParticleSequence::messages(&triples.iter().map(|t| t[0]).collect::<Vec<_>>(), "ghz-1");
    let pb = ParticleSequence::messages(&triples.iter().map(|t| t[1]).collect::<Vec<_>>(), "ghz-2");
    let (mut ca, mut cb, batches) = decoy_pair(&mut s, &pa, &pb, n);
    s.send(PartyId::Charlie, PartyId::Alice, Leg::CharlieAlice, &mut ca)?;
    s.send(PartyId::Charlie, PartyId::Bob, Leg::CharlieBob, &mut cb)?;
    for (measurer, legs, batch) in &batches {
        if !s.decoy_check(
            PartyId::Charlie,
            *measurer,
            legs,
            &[&ca, &cb],
            batch,
            CheckKind::Decoy,
        )? {
            return s.finish(msg, None, None);
        }
    }

    // Alice: dense coding, her own order, decoys on A-B.
    let a_msg = ca.message_qubits();
    for (&q, d) in a_msg.iter().zip(dibits(msg.as_slice())) {
        s.reg.apply_single(q, encode_dense(d))?;
    }
    let sigma = Permutation::random(n, &mut s.rngs.alice);
    let travel = ParticleSequence::messages(&sigma.apply(&a_msg)?, "alice-encoded");
    let mode = config.decoys_for(protocol);
    let (with_decoys, mut decoys) =
        insert_decoys(&travel, 0, mode, n, &mut s.reg, &mut s.rngs.alice);
    let (mut ab, redundant) = insert_redundant(
        &with_decoys,
        0,
        config.redundant,
        &mut s.reg,
        &mut s.rngs.alice,
    );
    decoys.reindex(0, &with_decoys, &ab)?;
    s.send(PartyId::Alice, PartyId::Bob, Leg::AliceBob, &mut ab)?;
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
    if !ok {
        return s.finish(msg, None, None);
    }
    s.announce(
        PartyId::Alice,
        Topic::MessageOrder,
        Payload::Indices(sigma.mapping().to_vec()),
        n as u64,
    )?;

    // Bob pairs and Bell-measures; Charlie measures his qubits 3.
    let order = s.disclosed_permutation(Topic::MessageOrder)?;
    let a_pairs = order.unapply(&ab.message_qubits())?;
    let b_pairs = cb.message_qubits();
    let mut kinds = Vec::with_capacity(n);
    for (&x, &y) in a_pairs.iter().zip(&b_pairs) {
        kinds.push(bell_kind(s.reg.measure(
            &[x, y],
            MeasBasis::Bell,
            &mut s.rngs.bob,
        )?));
    }
    let mut found_a = Vec::with_capacity(n);
    for t in &triples {
        let o = s.reg.measure(
            &[t[2]],
            advertised.third_basis().meas(),
            &mut s.rngs.charlie,
        )?;
        found_a.push(o.ket() == Some(advertised.a));
    }
    if matches!(s.attack_kind(), Some(AttackKind::BobPrematureDecode)) {
        // Without Charlie, Bob can only guess each pair's initial Bell state.
        let mut bits = Vec::with_capacity(2 * n);
        for &k in &kinds {
            let guess = if s.rngs.bob.random() {
                advertised.psi1
            } else {
                advertised.psi2
            };
            bits.extend(decode_dense(guess, k)?);
        }
        let bits = Bits(bits);
        let agree = msg.len() - bits.hamming(msg)?;
        s.inferred = Some((bits, Some(agree as f64 / msg.len() as f64)));
    }

    // Charlie's disclosures complete the reference states.
    s.announce(
        PartyId::Charlie,
        Topic::Family,
        Payload::Bits(Bits(family)),
        n as u64,
    )?;
    s.announce(
        PartyId::Charlie,
        Topic::ControllerOutcomes,
        Payload::Bits(Bits(found_a)),
        n as u64,
    )?;
    let family = s.disclosed_bits(Topic::Family)?;
    let outcomes = s.disclosed_bits(Topic::ControllerOutcomes)?;
    let mut decoded = Vec::with_capacity(2 * n);
    for ((&k, &r), &fa) in kinds.iter().zip(family.as_slice()).zip(outcomes.as_slice()) {
        let spec = if r { advertised.swapped() } else { advertised };
        decoded.extend(decode_dense(spec.bell_given(fa), k)?);
    }
    let decoded = Bits(decoded);
    s.decode(&decoded)?;
    s.finish(msg, Some(decoded), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::Sign;
    use crate::qsim::Ket;
    use crate::rng::harness;
    use proptest::prelude::*;

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn decode_swap_table() {
        use BellKind::*;
        assert!(!decode_swap(PsiPlus, PsiPlus, false).unwrap());
        assert!(!decode_swap(PhiPlus, PhiMinus, true).unwrap());
        assert!(decode_swap(PsiMinus, PsiPlus, false).unwrap());
        assert!(matches!(
            decode_swap(PsiPlus, PhiPlus, false),
            Err(Error::ImpossibleOutcome(_))
        ));
        let possible = BellKind::ALL
            .iter()
            .flat_map(|&a| BellKind::ALL.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| swap_relation(a, b).is_ok())
            .count();
        assert_eq!(possible, 8);
    }

    #[test]
    fn p3_honest_run_and_ledger() {
        let out = run_p3(
            &bits("101100"),
            None,
            None,
            &SessionConfig::default(),
            RngSeed(1),
        )
        .unwrap();
        assert_eq!(out.decoded, Some(bits("101100")));
        assert_eq!((out.ledger.c, out.ledger.q, out.ledger.b), (6, 36, 12));
        out.transcript.validate().unwrap();
    }

    #[test]
    fn p4_honest_run_and_ledger() {
        let out = run_p4(&bits("1001"), None, &SessionConfig::default(), RngSeed(1)).unwrap();
        assert_eq!(out.decoded, Some(bits("1001")));
        assert_eq!((out.ledger.c, out.ledger.q, out.ledger.b), (4, 12, 6));
        out.transcript.validate().unwrap();
    }

    #[test]
    fn p4_other_families_decode() {
        let ghz = GhzLikeSpec {
            psi1: BellKind::PhiMinus,
            psi2: BellKind::PsiPlus,
            a: Ket::Minus,
            b: Ket::Plus,
            sign: Sign::Minus,
        };
        let cfg = SessionConfig {
            ghz,
            ..Default::default()
        };
        let m = bits("11100100");
        assert_eq!(run_p4(&m, None, &cfg, RngSeed(8)).unwrap().decoded, Some(m));
    }

    #[test]
    fn wrong_source_is_caught_by_sacrificed_triples() {
        let cfg = SessionConfig {
            sacrificed: 8,
            ..Default::default()
        };
        let att = Attack::new(AttackKind::CharlieWrongState {
            prepared: GhzLikeSpec::default().swapped(),
        });
        let out = run_p3(&bits("1010"), None, Some(&att), &cfg, RngSeed(3)).unwrap();
        assert!(out.aborted());
        assert_eq!(out.abort.as_ref().unwrap().kind, CheckKind::Source);
        let out = run_p4(&bits("1010"), Some(&att), &cfg, RngSeed(3)).unwrap();
        assert!(out.report.unwrap().detected);
    }

    #[test]
    fn p3_rejects_unsupported_configs() {
        let cfg = SessionConfig {
            ghz: GhzLikeSpec::default().swapped(),
            ..Default::default()
        };
        assert!(run_p3(&bits("1"), None, None, &cfg, RngSeed(1)).is_err());
        let cfg = SessionConfig {
            decoy_mode: Some(DecoySubroutine::Gv),
            gv_placement: GvPlacement::SplitPair,
            ..Default::default()
        };
        assert!(run_p3(&bits("1"), None, None, &cfg, RngSeed(1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]
        #[test]
        fn honest_runs_decode(units in 1usize..9, seed in any::<u64>(), gv in any::<bool>(), split in any::<bool>(), red in 0usize..3) {
            let decoy_mode = Some(if gv { DecoySubroutine::Gv } else { DecoySubroutine::Bb84 });
            let cfg = SessionConfig { decoy_mode, ..Default::default() };
            let m = Bits::random(units, &mut harness(RngSeed(seed)));
            let out = run_p3(&m, None, None, &cfg, RngSeed(seed)).unwrap();
            prop_assert_eq!(out.decoded.as_ref(), Some(&m));
            prop_assert!(out.transcript.validate().is_ok());
            let gv_placement = if split { GvPlacement::SplitPair } else { GvPlacement::WholePair };
            let cfg = SessionConfig { decoy_mode, gv_placement, redundant: red, ..Default::default() };
            let m = Bits::random(2 * units, &mut harness(RngSeed(seed)));
            let out = run_p4(&m, None, &cfg, RngSeed(seed)).unwrap();
            prop_assert_eq!(out.decoded.as_ref(), Some(&m));
            prop_assert!(out.transcript.validate().is_ok());
        }
    }
}
