//! Seeded Monte-Carlo experiments behind the CLI reports and the acceptance
//! suite. Trials run in parallel; results are always assembled in trial order,
//! so every experiment is a pure function of its seed.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{
    entangle_measure, intercept_resend, Attack, AttackKind, AttackReport, BasisPolicy, EveNotes,
};
use crate::analysis::{binomial_two_sided_p, mutual_information};
use crate::error::{arg, Result};
use crate::primitives::{
    decode_dense, encode_z, make_bell, make_ghz_like, random_bb84_ket, verify_decoys, DecoyBatch,
    GhzLikeSpec, Particle, ParticleSequence, Role,
};
use crate::protocols::{
    self, decode_swap, Bits, CheckKind, Event, Leg, ProtocolKind, SessionConfig, SessionOutcome,
};
use crate::qsim::{BellKind, Ket, MeasBasis, QubitId, Register};
use crate::rng::{harness, RngSeed, SimRng};

/// Runs `f` on the seeds of trials `0..trials` in parallel, returning results in trial order.
pub fn run_trials<T, F>(trials: usize, seed: RngSeed, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, RngSeed) -> Result<T> + Sync,
{
    (0..trials as u64)
        .into_par_iter()
        .map(|i| f(i, seed.trial(i)))
        .collect()
}

/// A random message of `units` units for `protocol`, drawn from the harness stream.
pub fn random_message(protocol: ProtocolKind, units: usize, rng: &mut SimRng) -> Bits {
    Bits::random(units * protocol.bits_per_unit(), rng)
}

/// BB84 decoys of a batch as a standalone sequence.
fn bb84_batch(
    n: usize,
    reg: &mut Register,
    rng: &mut SimRng,
) -> (ParticleSequence, DecoyBatch, HashMap<QubitId, Ket>) {
    let kets: Vec<Ket> = (0..n).map(|_| random_bb84_ket(rng)).collect();
    let mut truth = HashMap::new();
    let particles = kets
        .iter()
        .map(|&k| {
            let q = reg.prepare(k);
            truth.insert(q, k);
            Particle::new(q, Role::Decoy, "bb84-decoy")
        })
        .collect();
    let positions: Vec<usize> = (0..n).collect();
    (
        ParticleSequence::from_particles(particles),
        DecoyBatch::bb84_at(0, &positions, &kets),
        truth,
    )
}

/// Decoys per independent batch in the decoy-level experiments.
const BATCH: usize = 100;

fn batches(decoys: usize) -> Vec<usize> {
    let mut v = vec![BATCH; decoys / BATCH];
    if !decoys.is_multiple_of(BATCH) {
        v.push(decoys % BATCH);
    }
    v
}

/// Intercept-resend against BB84 decoys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterceptStats {
    pub decoys: usize,
    pub decoy_errors: usize,
    /// Attacked decoys Eve read with the prepared value.
    pub eve_correct: usize,
    pub eve_attacked: usize,
}

impl InterceptStats {
    pub fn error_rate(&self) -> f64 {
        self.decoy_errors as f64 / self.decoys as f64
    }

    pub fn eve_success(&self) -> f64 {
        if self.eve_attacked == 0 {
            0.0
        } else {
            self.eve_correct as f64 / self.eve_attacked as f64
        }
    }
}

/// Eve intercepts a fraction `f` of `decoys` BB84 decoys and resends what she saw.
pub fn intercept_decoys(
    decoys: usize,
    f: f64,
    policy: BasisPolicy,
    seed: RngSeed,
) -> Result<InterceptStats> {
    if decoys == 0 {
        return arg("need at least one decoy");
    }
    let sizes = batches(decoys);
    let parts = run_trials(sizes.len(), seed, |i, s| {
        let mut prep = s.stream(3);
        let mut eve = s.stream(4);
        let mut bob = s.stream(2);
        let mut reg = Register::new();
        let (seq, batch, truth) = bb84_batch(sizes[i as usize], &mut reg, &mut prep);
        let mut notes = EveNotes::default();
        intercept_resend(&seq, policy, f, &mut reg, &mut eve, &truth, &mut notes)?;
        let check = verify_decoys(&[&seq], &batch, &mut reg, &mut bob)?;
        Ok((check, notes.correct, notes.known))
    })?;
    Ok(parts.into_iter().fold(
        InterceptStats {
            decoys: 0,
            decoy_errors: 0,
            eve_correct: 0,
            eve_attacked: 0,
        },
        |acc, (c, ok, known)| InterceptStats {
            decoys: acc.decoys + c.checked,
            decoy_errors: acc.decoy_errors + c.errors,
            eve_correct: acc.eve_correct + ok,
            eve_attacked: acc.eve_attacked + known,
        },
    ))
}

/// Fraction of `trials` in which Eve, measuring `m` random BB84 qubits in
/// random bases, reads every one of them correctly.
pub fn joint_success(m: usize, trials: usize, seed: RngSeed) -> Result<f64> {
    let wins = run_trials(trials, seed, |_, s| {
        let mut prep = s.stream(3);
        let mut eve = s.stream(4);
        let mut reg = Register::new();
        let (seq, _, truth) = bb84_batch(m, &mut reg, &mut prep);
        let mut notes = EveNotes::default();
        intercept_resend(
            &seq,
            BasisPolicy::Random,
            1.0,
            &mut reg,
            &mut eve,
            &truth,
            &mut notes,
        )?;
        Ok(notes.correct == m)
    })?;
    Ok(wins.iter().filter(|&&w| w).count() as f64 / trials as f64)
}

/// Per-decoy error rate of the entangle-and-measure attack with strength `beta_sq`.
pub fn entangle_detection(beta_sq: f64, decoys: usize, seed: RngSeed) -> Result<f64> {
    if decoys == 0 {
        return arg("need at least one decoy");
    }
    let sizes = batches(decoys);
    let parts = run_trials(sizes.len(), seed, |i, s| {
        let mut prep = s.stream(3);
        let mut bob = s.stream(2);
        let mut reg = Register::new();
        let (seq, batch, _) = bb84_batch(sizes[i as usize], &mut reg, &mut prep);
        entangle_measure(&seq, beta_sq, &mut reg, &mut EveNotes::default())?;
        verify_decoys(&[&seq], &batch, &mut reg, &mut bob)
    })?;
    let (errors, checked) = parts
        .iter()
        .fold((0, 0), |(e, c), r| (e + r.errors, c + r.checked));
    Ok(errors as f64 / checked as f64)
}

/// Tally of simulated entanglement-swapping rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SwapStats {
    pub rounds: usize,
    /// Observed (Alice outcome 1, Alice outcome 2, Bob's bit) triples per message bit.
    pub combos: BTreeMap<(bool, BellKind, BellKind, bool), usize>,
    pub decoded_ok: usize,
    /// Rounds with outcomes of different letters (impossible for the advertised state).
    pub cross_letter: usize,
}

impl SwapStats {
    /// Distinct outcome pairs seen for message bit `m`.
    pub fn outcome_pairs(&self, m: bool) -> usize {
        let mut pairs: Vec<(BellKind, BellKind)> = self
            .combos
            .keys()
            .filter(|k| k.0 == m)
            .map(|k| (k.1, k.2))
            .collect();
        pairs.dedup();
        pairs.len()
    }
}

/// Simulates `rounds` swapping rounds per message bit value on fresh triples of
/// the default GHZ-like state, with Bob measuring qubit 3 in its basis.
pub fn swap_rounds(rounds: usize, seed: RngSeed) -> Result<SwapStats> {
    let spec = GhzLikeSpec::default();
    let results = run_trials(2 * rounds, seed, |i, s| {
        let m = i % 2 == 1;
        let mut rng = s.stream(1);
        let mut reg = Register::new();
        let [q1, q2, q3] = make_ghz_like(&spec, &mut reg)?;
        let (x, y) = make_bell(BellKind::PsiPlus, &mut reg);
        reg.apply_single(x, encode_z(m))?;
        let o1 = reg
            .measure(&[x, q1], MeasBasis::Bell, &mut rng)?
            .bell()
            .expect("Bell outcome");
        let o2 = reg
            .measure(&[y, q2], MeasBasis::Bell, &mut rng)?
            .bell()
            .expect("Bell outcome");
        let bob = reg
            .measure(&[q3], spec.third_basis().meas(), &mut rng)?
            .ket()
            == Some(spec.b);
        Ok((m, o1, o2, bob))
    })?;
    let mut stats = SwapStats {
        rounds: results.len(),
        ..Default::default()
    };
    for (m, o1, o2, bob) in results {
        *stats.combos.entry((m, o1, o2, bob)).or_default() += 1;
        match decode_swap(o1, o2, bob) {
            Ok(bit) if bit == m => stats.decoded_ok += 1,
            Ok(_) => {}
            Err(_) => stats.cross_letter += 1,
        }
    }
    Ok(stats)
}

/// Result of the premature-decode experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrematureStats {
    pub trials: usize,
    /// Trials whose sampled bit Bob guessed wrong.
    pub errors: usize,
    /// Two-sided binomial p-value against an error probability of 1/2.
    pub p_value: f64,
}

impl PrematureStats {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }
}

/// Bob decodes before Charlie's disclosure in `trials` sessions of `units`
/// message units; one uniformly chosen message bit per session is scored.
pub fn premature_decode(
    protocol: ProtocolKind,
    units: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<PrematureStats> {
    let attack = Attack::new(AttackKind::BobPrematureDecode);
    let cfg = SessionConfig::default();
    let wrong = run_trials(trials, seed, |_, s| {
        let mut h = harness(s);
        let msg = random_message(protocol, units, &mut h);
        let out = protocols::run(protocol, &msg, Some(&attack), &cfg, s)?;
        let guess = inferred(&out)?;
        let i = h.random_range(0..msg.len());
        Ok(guess.as_slice()[i] != msg.as_slice()[i])
    })?;
    let errors = wrong.iter().filter(|&&w| w).count();
    Ok(PrematureStats {
        trials,
        errors,
        p_value: binomial_two_sided_p(errors as u64, trials as u64, 0.5)?,
    })
}

fn inferred(out: &SessionOutcome) -> Result<Bits> {
    out.report
        .as_ref()
        .and_then(|r| r.eve_inferred_bits.clone())
        .ok_or_else(|| {
            crate::error::Error::ProtocolState("attack produced no inferred bits".into())
        })
}

/// Runs `attack` on `trials` honest-message sessions and returns the reports
/// together with the messages and decoded outputs.
pub fn attack_trials(
    protocol: ProtocolKind,
    units: usize,
    attack: &Attack,
    config: &SessionConfig,
    trials: usize,
    seed: RngSeed,
) -> Result<Vec<(Bits, SessionOutcome)>> {
    run_trials(trials, seed, |_, s| {
        let msg = random_message(protocol, units, &mut harness(s));
        let out = protocols::run(protocol, &msg, Some(attack), config, s)?;
        Ok((msg, out))
    })
}

/// Reports of a batch of attacked sessions.
pub fn reports(trials: &[(Bits, SessionOutcome)]) -> Vec<AttackReport> {
    trials
        .iter()
        .filter_map(|(_, o)| o.report.clone())
        .collect()
}

/// What Charlie learns with the fake-sequence attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FakeSequenceStats {
    pub trials: usize,
    /// Sessions in which Charlie's inferred bits equal the order exactly.
    pub full_information: usize,
    /// Plug-in mutual information (bits per bit) between inferred and true bits.
    pub mutual_information: f64,
    pub detected: usize,
}

pub fn fake_sequence(
    protocol: ProtocolKind,
    units: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<FakeSequenceStats> {
    let attack = Attack::new(AttackKind::CharlieFakeSequence);
    let runs = attack_trials(
        protocol,
        units,
        &attack,
        &SessionConfig::default(),
        trials,
        seed,
    )?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let (mut full, mut detected) = (0, 0);
    for (msg, out) in &runs {
        let bits = inferred(out)?;
        full += usize::from(&bits == msg);
        detected += usize::from(out.report.as_ref().is_some_and(|r| r.detected));
        xs.extend_from_slice(msg.as_slice());
        ys.extend_from_slice(bits.as_slice());
    }
    Ok(FakeSequenceStats {
        trials,
        full_information: full,
        mutual_information: mutual_information(&xs, &ys)?,
        detected,
    })
}

/// Detection frequency of a wrong permutation announced by Alice.
pub fn wrong_permutation(
    protocol: ProtocolKind,
    units: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<f64> {
    let attack = Attack::new(AttackKind::AliceWrongPermutation { announced: None });
    let runs = attack_trials(
        protocol,
        units,
        &attack,
        &SessionConfig::default(),
        trials,
        seed,
    )?;
    let detected = reports(&runs).iter().filter(|r| r.detected).count();
    Ok(detected as f64 / trials as f64)
}

/// The X-flip attack on P2's A-B leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XFlipStats {
    pub trials: usize,
    /// Largest A-B decoy error rate seen.
    pub max_decoy_error: f64,
    /// Sessions whose output is the order with the second bit of every dibit flipped.
    pub flipped_pattern: usize,
    /// Sessions that aborted.
    pub detected: usize,
}

pub fn x_flip_p2(
    units: usize,
    redundant: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<XFlipStats> {
    let attack = Attack::new(AttackKind::XFlipAll);
    let cfg = SessionConfig {
        redundant,
        ..Default::default()
    };
    let runs = attack_trials(ProtocolKind::P2, units, &attack, &cfg, trials, seed)?;
    let mut stats = XFlipStats {
        trials,
        max_decoy_error: 0.0,
        flipped_pattern: 0,
        detected: 0,
    };
    for (msg, out) in &runs {
        let expected = Bits(
            msg.as_slice()
                .iter()
                .enumerate()
                .map(|(i, &b)| b ^ (i % 2 == 1))
                .collect(),
        );
        stats.flipped_pattern += usize::from(out.decoded.as_ref() == Some(&expected));
        stats.detected += usize::from(out.aborted());
        let decoy_error = out
            .transcript
            .checks()
            .filter_map(|e| match e {
                Event::Check {
                    leg: Leg::AliceBob,
                    kind: CheckKind::Decoy,
                    errors,
                    checked,
                    ..
                } => Some(*errors as f64 / (*checked).max(1) as f64),
                _ => None,
            })
            .fold(0.0, f64::max);
        stats.max_decoy_error = stats.max_decoy_error.max(decoy_error);
    }
    Ok(stats)
}

/// Empirical BB84 decoy error rate against intercept-resend for each `f`.
pub fn threshold_sweep(fs: &[f64], decoys: usize, seed: RngSeed) -> Result<Vec<(f64, f64)>> {
    fs.iter()
        .enumerate()
        .map(|(i, &f)| {
            Ok((
                f,
                intercept_decoys(decoys, f, BasisPolicy::Random, seed.trial(i as u64))?
                    .error_rate(),
            ))
        })
        .collect()
}

/// Dibits recovered from every Bell outcome against every reference: a check
/// that dense decoding is a bijection for each reference state.
pub fn dense_table() -> Result<Vec<(BellKind, BellKind, [bool; 2])>> {
    let mut out = Vec::new();
    for init in BellKind::ALL {
        for measured in BellKind::ALL {
            out.push((init, measured, decode_dense(init, measured)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiments_are_deterministic() {
        let a = intercept_decoys(300, 1.0, BasisPolicy::Random, RngSeed(1)).unwrap();
        let b = intercept_decoys(300, 1.0, BasisPolicy::Random, RngSeed(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.decoys, 300);
    }

    #[test]
    fn no_attack_no_errors() {
        assert_eq!(
            intercept_decoys(250, 0.0, BasisPolicy::Random, RngSeed(2))
                .unwrap()
                .decoy_errors,
            0
        );
        assert_eq!(entangle_detection(0.0, 250, RngSeed(2)).unwrap(), 0.0);
    }

    #[test]
    fn swap_rounds_decode() {
        let s = swap_rounds(200, RngSeed(3)).unwrap();
        assert_eq!(s.decoded_ok, 400);
        assert_eq!(s.cross_letter, 0);
        assert!(s.outcome_pairs(false) <= 8 && s.outcome_pairs(true) <= 8);
    }

    #[test]
    fn dense_table_is_a_bijection_per_reference() {
        let t = dense_table().unwrap();
        for init in BellKind::ALL {
            let mut d: Vec<[bool; 2]> = t.iter().filter(|r| r.0 == init).map(|r| r.2).collect();
            d.sort();
            d.dedup();
            assert_eq!(d.len(), 4);
        }
    }
}
