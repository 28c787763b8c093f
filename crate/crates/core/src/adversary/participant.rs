use std::collections::HashMap;

use rand::Rng;

use super::{Attack, AttackKind};
use crate::error::{Error, Result};
use crate::primitives::{random_bb84_ket, ParticleSequence, Permutation};
use crate::protocols::{self, Bits, ProtocolKind, SessionConfig, SessionOutcome};
use crate::qsim::{Ket, QubitId, Register};
use crate::rng::RngSeed;

/// Replaces every qubit of `seq` by a fresh random BB84 state and returns the
/// captured original sequence.
pub fn charlie_capture<R: Rng + ?Sized>(
    seq: &mut ParticleSequence,
    reg: &mut Register,
    rng: &mut R,
) -> Result<ParticleSequence> {
    let captured = seq.clone();
    for i in 0..seq.len() {
        let fake = reg.prepare(random_bb84_ket(rng));
        seq.replace_qubit(i, fake)?;
    }
    Ok(captured)
}

/// Measures the captured slots that are not listed in `check_positions` in the
/// basis Charlie prepared them in and reads each as "flipped or not".
///
/// Charlie is granted knowledge of which prepared qubit sits in each slot, the
/// strongest version of this attack.
pub fn charlie_read_captured<R: Rng + ?Sized>(
    captured: &ParticleSequence,
    check_positions: &[usize],
    prepared: &HashMap<QubitId, Ket>,
    reg: &mut Register,
    rng: &mut R,
) -> Result<Bits> {
    let mut bits = Vec::new();
    for (i, p) in captured.iter().enumerate() {
        if check_positions.contains(&i) {
            continue;
        }
        let q = p.qubit();
        let k = *prepared.get(&q).ok_or_else(|| {
            Error::ProtocolState(format!("Charlie did not prepare captured qubit {q}"))
        })?;
        bits.push(reg.measure(&[q], k.basis().meas(), rng)?.ket() != Some(k));
    }
    Ok(Bits(bits))
}

/// Ways a dishonest Alice can try to change her order after sending it.
#[derive(Debug, Clone, PartialEq)]
pub enum CheatVariant {
    /// Announce `announced` instead of the key `key` actually used.
    KeyChange { key: Option<Bits>, announced: Bits },
    /// Announce a wrong permutation (random when `None`).
    WrongPermutation(Option<Permutation>),
}

/// Runs `protocol` with a cheating Alice. The session outcome carries the
/// attack report. Key changes need a key (HYJ); wrong permutations need a
/// permutation Alice discloses (P1, P2).
pub fn alice_cheats(
    protocol: ProtocolKind,
    msg: &Bits,
    variant: CheatVariant,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    let kind = match variant {
        CheatVariant::KeyChange { key, announced } => AttackKind::AliceKeyChange { key, announced },
        CheatVariant::WrongPermutation(announced) => {
            AttackKind::AliceWrongPermutation { announced }
        }
    };
    protocols::run(protocol, msg, Some(&Attack::new(kind)), config, seed)
}

/// Runs `protocol` (CLZ, HYJ or P1) with Charlie swapping Alice's outbound
/// sequence for a fake one.
pub fn charlie_fake_sequence(
    protocol: ProtocolKind,
    msg: &Bits,
    config: &SessionConfig,
    seed: RngSeed,
) -> Result<SessionOutcome> {
    protocols::run(
        protocol,
        msg,
        Some(&Attack::new(AttackKind::CharlieFakeSequence)),
        config,
        seed,
    )
}
