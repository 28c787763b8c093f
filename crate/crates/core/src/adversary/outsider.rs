use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{AttackKind, BasisPolicy};
use crate::error::Result;
use crate::primitives::ParticleSequence;
use crate::qsim::{c, Ket, PauliOp, QubitId, Register, SingleBasis, StateVector};

/// Eve's private record of a session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EveNotes {
    /// Intercepted qubits with the basis used and the bit observed.
    pub intercepted: Vec<(QubitId, SingleBasis, bool)>,
    /// Intercepted qubits whose prepared state the harness knows.
    pub known: usize,
    /// How many of those Eve read with the prepared bit value.
    pub correct: usize,
    /// Ancillas kept by the entangle-and-measure attack.
    pub ancillas: Vec<QubitId>,
    /// Parities learned by correlation elicitation.
    pub parities: Vec<bool>,
}

impl EveNotes {
    pub fn success_rate(&self) -> Option<f64> {
        (self.known > 0).then(|| self.correct as f64 / self.known as f64)
    }

    pub fn observed_bits(&self) -> Vec<bool> {
        self.intercepted.iter().map(|&(_, _, b)| b).collect()
    }
}

/// Measures `round(f·L)` uniformly chosen qubits of the leg and forwards each in
/// the observed state. `truth` holds the prepared state of qubits whose
/// preparation is known to the harness and is used only for scoring Eve.
pub fn intercept_resend<R: Rng + ?Sized>(
    seq: &ParticleSequence,
    policy: BasisPolicy,
    fraction: f64,
    reg: &mut Register,
    rng: &mut R,
    truth: &HashMap<QubitId, Ket>,
    notes: &mut EveNotes,
) -> Result<()> {
    let len = seq.len();
    let k = ((fraction * len as f64).round() as usize).min(len);
    let mut slots = index::sample(rng, len, k).into_vec();
    slots.sort_unstable();
    for slot in slots {
        let q = seq.particles()[slot].qubit();
        let basis = match policy {
            BasisPolicy::Random => {
                if rng.random() {
                    SingleBasis::Diagonal
                } else {
                    SingleBasis::Computational
                }
            }
            BasisPolicy::Fixed(b) => b,
        };
        let bit = reg
            .measure(&[q], basis.meas(), rng)?
            .bit()
            .expect("single-qubit outcome");
        if let Some(k) = truth.get(&q) {
            notes.known += 1;
            if k.bit() == bit {
                notes.correct += 1;
            }
        }
        notes.intercepted.push((q, basis, bit));
    }
    Ok(())
}

/// Attaches an ancilla √(1−|β|²)|0⟩ + β|1⟩ to every qubit of the leg with a
/// CNOT whose control is the ancilla. A |0⟩/|1⟩ qubit is flipped with
/// probability |β|² while |±⟩ are X eigenstates and pass unchanged, so a BB84
/// check catches the attack with probability |β|²/2 per decoy.
pub fn entangle_measure(
    seq: &ParticleSequence,
    beta_sq: f64,
    reg: &mut Register,
    notes: &mut EveNotes,
) -> Result<()> {
    if beta_sq == 0.0 {
        // the ancilla would be |0⟩ and the CNOT the identity
        return Ok(());
    }
    for p in seq.iter() {
        let anc = StateVector::from_amplitudes(vec![
            c((1.0 - beta_sq).sqrt(), 0.0),
            c(beta_sq.sqrt(), 0.0),
        ])?;
        let a = reg.alloc_state(anc)[0];
        reg.apply_cnot(a, p.qubit())?;
        notes.ancillas.push(a);
    }
    Ok(())
}

/// Pairs the leg's qubits at random and measures the parity of each pair with
/// two CNOTs into a fresh |0⟩ ancilla. A genuine Bell pair reveals ψ (even) or
/// φ (odd) and is left intact; halves of different pairs get entangled.
pub fn correlation_elicitation<R: Rng + ?Sized>(
    seq: &ParticleSequence,
    reg: &mut Register,
    rng: &mut R,
    notes: &mut EveNotes,
) -> Result<()> {
    let mut qs = seq.qubits();
    qs.shuffle(rng);
    for pair in qs.chunks_exact(2) {
        let anc = reg.prepare(Ket::Zero);
        reg.apply_cnot(pair[0], anc)?;
        reg.apply_cnot(pair[1], anc)?;
        let parity = reg
            .measure(&[anc], SingleBasis::Computational.meas(), rng)?
            .bit()
            .expect("single-qubit outcome");
        notes.parities.push(parity);
    }
    Ok(())
}

/// Applies X to every qubit of the leg.
pub fn x_flip_all(seq: &ParticleSequence, reg: &mut Register) -> Result<()> {
    seq.iter()
        .try_for_each(|p| reg.apply_single(p.qubit(), PauliOp::X))
}

/// Runs an outsider attack on a freshly sent sequence. Participant attacks are
/// no-ops here; the protocol runners execute them.
pub fn apply_outsider<R: Rng + ?Sized>(
    kind: &AttackKind,
    seq: &ParticleSequence,
    reg: &mut Register,
    rng: &mut R,
    truth: &HashMap<QubitId, Ket>,
    notes: &mut EveNotes,
) -> Result<()> {
    match kind {
        AttackKind::InterceptResend { policy, fraction } => {
            intercept_resend(seq, *policy, *fraction, reg, rng, truth, notes)
        }
        AttackKind::EntangleMeasure { beta_sq } => entangle_measure(seq, *beta_sq, reg, notes),
        AttackKind::CorrelationElicitation => correlation_elicitation(seq, reg, rng, notes),
        AttackKind::XFlipAll => x_flip_all(seq, reg),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{make_bell, verify_decoys, DecoyBatch, ParticleSequence};
    use crate::qsim::{BellKind, MeasBasis, Outcome, EXACT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bb84_leg(
        reg: &mut Register,
        rng: &mut ChaCha20Rng,
        n: usize,
    ) -> (ParticleSequence, DecoyBatch) {
        let kets: Vec<Ket> = (0..n)
            .map(|_| crate::primitives::random_bb84_ket(rng))
            .collect();
        let qs: Vec<QubitId> = kets.iter().map(|&k| reg.prepare(k)).collect();
        let seq = ParticleSequence::from_particles(
            qs.iter()
                .map(|&q| crate::primitives::Particle::new(q, crate::primitives::Role::Decoy, "t"))
                .collect(),
        );
        let positions: Vec<usize> = (0..n).collect();
        (seq, DecoyBatch::bb84_at(0, &positions, &kets))
    }

    #[test]
    fn zero_fraction_leaves_the_leg_alone() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut reg = Register::new();
        let (seq, batch) = bb84_leg(&mut reg, &mut rng, 200);
        let mut notes = EveNotes::default();
        intercept_resend(
            &seq,
            BasisPolicy::Random,
            0.0,
            &mut reg,
            &mut rng,
            &HashMap::new(),
            &mut notes,
        )
        .unwrap();
        assert!(notes.intercepted.is_empty());
        assert_eq!(
            verify_decoys(&[&seq], &batch, &mut reg, &mut rng)
                .unwrap()
                .errors,
            0
        );
    }

    #[test]
    fn fraction_selects_rounded_count() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut reg = Register::new();
        let (seq, _) = bb84_leg(&mut reg, &mut rng, 10);
        let mut notes = EveNotes::default();
        intercept_resend(
            &seq,
            BasisPolicy::Random,
            0.68,
            &mut reg,
            &mut rng,
            &HashMap::new(),
            &mut notes,
        )
        .unwrap();
        assert_eq!(notes.intercepted.len(), 7);
    }

    #[test]
    fn matching_fixed_basis_is_invisible() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut reg = Register::new();
        let qs: Vec<QubitId> = (0..50)
            .map(|i| reg.prepare(if i % 2 == 0 { Ket::Zero } else { Ket::One }))
            .collect();
        let seq = ParticleSequence::messages(&qs, "t");
        let mut notes = EveNotes::default();
        let policy = BasisPolicy::Fixed(SingleBasis::Computational);
        intercept_resend(
            &seq,
            policy,
            1.0,
            &mut reg,
            &mut rng,
            &HashMap::new(),
            &mut notes,
        )
        .unwrap();
        for (i, q) in qs.iter().enumerate() {
            let o = reg
                .measure(&[*q], MeasBasis::Computational, &mut rng)
                .unwrap();
            assert_eq!(o.bit(), Some(i % 2 == 1));
        }
    }

    /// Oracle: CNOT(ancilla → travel) on |+⟩ ⊗ (α|0⟩ + β|1⟩) leaves the travel
    /// qubit in |+⟩, and on |0⟩ flips it with probability |β|².
    #[test]
    fn entangle_measure_oracle() {
        let mut reg = Register::new();
        let plus = reg.prepare(Ket::Plus);
        let zero = reg.prepare(Ket::Zero);
        let seq = ParticleSequence::messages(&[plus, zero], "t");
        let mut notes = EveNotes::default();
        entangle_measure(&seq, 0.3, &mut reg, &mut notes).unwrap();
        let p = reg.probabilities(&[plus], MeasBasis::Diagonal).unwrap();
        assert!((p[0].1 - 1.0).abs() < EXACT_TOL);
        let p = reg
            .probabilities(&[zero], MeasBasis::Computational)
            .unwrap();
        assert!((p[1].1 - 0.3).abs() < 1e-9);
        assert_eq!(notes.ancillas.len(), 2);
    }

    #[test]
    fn parity_of_true_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for (kind, parity) in [
            (BellKind::PsiPlus, false),
            (BellKind::PsiMinus, false),
            (BellKind::PhiPlus, true),
            (BellKind::PhiMinus, true),
        ] {
            let mut reg = Register::new();
            let (a, b) = make_bell(kind, &mut reg);
            let seq = ParticleSequence::messages(&[a, b], "t");
            let mut notes = EveNotes::default();
            correlation_elicitation(&seq, &mut reg, &mut rng, &mut notes).unwrap();
            assert_eq!(notes.parities, vec![parity]);
            assert_eq!(
                reg.measure(&[a, b], MeasBasis::Bell, &mut rng).unwrap(),
                Outcome::Bell(kind)
            );
        }
    }

    #[test]
    fn x_flip_keeps_psi_plus_and_flips_known_values() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut reg = Register::new();
        let (a, b) = make_bell(BellKind::PsiPlus, &mut reg);
        let z = reg.prepare(Ket::Zero);
        let seq = ParticleSequence::messages(&[a, b, z], "t");
        x_flip_all(&seq, &mut reg).unwrap();
        assert_eq!(
            reg.measure(&[a, b], MeasBasis::Bell, &mut rng).unwrap(),
            Outcome::Bell(BellKind::PsiPlus)
        );
        assert_eq!(
            reg.measure(&[z], MeasBasis::Computational, &mut rng)
                .unwrap(),
            Outcome::One
        );
        x_flip_all(&ParticleSequence::new(), &mut reg).unwrap();
    }
}
