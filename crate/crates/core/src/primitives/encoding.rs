//! Classical-to-Pauli message encoders.

use crate::error::{Error, Result};
use crate::qsim::{BellKind, PauliOp, StateVector};

/// Single-photon encoding: 0 → I, 1 → iY. Since iY flips both |0⟩↔|1⟩ and
/// |+⟩↔|−⟩ (up to sign), a receiver who knows the preparation state reads the
/// bit as "flipped or not".
pub fn encode_lm05(bit: bool) -> PauliOp {
    if bit {
        PauliOp::IY
    } else {
        PauliOp::I
    }
}

/// Dense coding of a dibit `[first, second]`: 00 → I, 01 → X, 10 → iY, 11 → Z.
pub fn encode_dense(dibit: [bool; 2]) -> PauliOp {
    match dibit {
        [false, false] => PauliOp::I,
        [false, true] => PauliOp::X,
        [true, false] => PauliOp::IY,
        [true, true] => PauliOp::Z,
    }
}

/// Phase encoding used with entanglement swapping: 0 → I, 1 → Z.
pub fn encode_z(bit: bool) -> PauliOp {
    if bit {
        PauliOp::Z
    } else {
        PauliOp::I
    }
}

pub const DIBITS: [[bool; 2]; 4] = [[false, false], [false, true], [true, false], [true, true]];

/// Bell state obtained by applying the encoding of `dibit` to qubit 0 of `initial`.
pub fn dense_image(initial: BellKind, dibit: [bool; 2]) -> BellKind {
    let mut s = StateVector::bell(initial);
    s.apply_single(encode_dense(dibit), 0)
        .expect("qubit 0 exists");
    s.bell_kind()
        .expect("Paulis map Bell states to Bell states")
}

/// Recovers the dibit from the Bell state `measured` of a pair that started in
/// `initial` and had the dense-coding Pauli applied to its first qubit.
pub fn decode_dense(initial: BellKind, measured: BellKind) -> Result<[bool; 2]> {
    DIBITS
        .into_iter()
        .find(|&d| dense_image(initial, d) == measured)
        .ok_or_else(|| {
            Error::ImpossibleOutcome(format!("{measured} is not reachable from {initial}"))
        })
}

/// Splits a bit string into dibits (`bits.len()` must be even).
pub fn dibits(bits: &[bool]) -> Vec<[bool; 2]> {
    bits.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{c, Ket, MeasBasis, Outcome, Register, EXACT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn encoder_tables() {
        assert_eq!(encode_lm05(false), PauliOp::I);
        assert_eq!(encode_lm05(true), PauliOp::IY);
        assert_eq!(encode_z(false), PauliOp::I);
        assert_eq!(encode_z(true), PauliOp::Z);
        assert_eq!(encode_dense([false, false]), PauliOp::I);
        assert_eq!(encode_dense([true, true]), PauliOp::Z);
    }

    #[test]
    fn iy_on_plus_reads_as_flip() {
        // iY|+⟩ = (iY|0⟩ + iY|1⟩)/√2 = (−|1⟩ + |0⟩)/√2 = |−⟩
        let mut s = StateVector::ket(Ket::Plus);
        s.apply_single(encode_lm05(true), 0).unwrap();
        assert!(s.approx_eq_up_to_phase(&StateVector::ket(Ket::Minus), EXACT_TOL));
        for k in Ket::ALL {
            let mut s = StateVector::ket(k);
            s.apply_single(encode_lm05(true), 0).unwrap();
            assert!(s.approx_eq_up_to_phase(&StateVector::ket(k.flipped()), EXACT_TOL));
        }
    }

    /// Two-qubit oracle written out by hand: amplitudes of P⊗I applied to ψ+.
    fn oracle_image(p: PauliOp) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // index = q0 + 2·q1; ψ+ has amplitude h on |00⟩ (0) and |11⟩ (3)
        let amps = match p {
            PauliOp::I => [h, 0.0, 0.0, h],
            PauliOp::X => [0.0, h, h, 0.0],   // |10⟩ + |01⟩
            PauliOp::IY => [0.0, -h, h, 0.0], // −|10⟩ + |01⟩
            PauliOp::Z => [h, 0.0, 0.0, -h],
        };
        StateVector::from_amplitudes(amps.iter().map(|&a| c(a, 0.0)).collect()).unwrap()
    }

    #[test]
    fn dense_images_match_hand_oracle() {
        assert_eq!(
            dense_image(BellKind::PsiPlus, [false, true]),
            BellKind::PhiPlus
        );
        assert_eq!(
            dense_image(BellKind::PsiPlus, [true, true]),
            BellKind::PsiMinus
        );
        assert_eq!(
            dense_image(BellKind::PsiPlus, [true, false]),
            BellKind::PhiMinus
        );
        for d in DIBITS {
            let want = oracle_image(encode_dense(d)).bell_kind().unwrap();
            assert_eq!(dense_image(BellKind::PsiPlus, d), want);
        }
    }

    #[test]
    fn dense_coding_is_a_bijection_for_every_start() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for initial in BellKind::ALL {
            let mut images: Vec<BellKind> =
                DIBITS.iter().map(|&d| dense_image(initial, d)).collect();
            images.sort();
            images.dedup();
            assert_eq!(images.len(), 4);
            for d in DIBITS {
                let mut reg = Register::new();
                let q = reg.alloc_state(StateVector::bell(initial));
                reg.apply_single(q[0], encode_dense(d)).unwrap();
                let o = reg.measure(&q, MeasBasis::Bell, &mut rng).unwrap();
                let Outcome::Bell(kind) = o else {
                    panic!("Bell outcome expected")
                };
                assert_eq!(decode_dense(initial, kind).unwrap(), d);
            }
        }
    }

    #[test]
    fn wrong_reference_flips_both_bits() {
        for d in DIBITS {
            let measured = dense_image(BellKind::PsiPlus, d);
            let wrong = decode_dense(BellKind::PsiMinus, measured).unwrap();
            assert_eq!(wrong, [!d[0], !d[1]]);
        }
    }

    #[test]
    fn x_before_encoding_flips_second_bit() {
        for d in DIBITS {
            let mut s = StateVector::bell(BellKind::PsiPlus);
            s.apply_single(encode_dense(d), 0).unwrap();
            s.apply_single(PauliOp::X, 0).unwrap();
            let got = decode_dense(BellKind::PsiPlus, s.bell_kind().unwrap()).unwrap();
            assert_eq!(got, [d[0], !d[1]]);
        }
    }
}
