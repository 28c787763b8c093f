use std::fmt;

use crate::error::{arg, Result};
use crate::qsim::{c, BellKind, Ket, QubitId, Register, SingleBasis, StateVector, FRAC_1_SQRT_2};

/// Prepares a fresh Bell pair and returns its two qubits.
pub fn make_bell(kind: BellKind, reg: &mut Register) -> (QubitId, QubitId) {
    let q = reg.alloc_state(StateVector::bell(kind));
    (q[0], q[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// Parameters of a three-qubit state (|ψ₁⟩₁₂|a⟩₃ ± |ψ₂⟩₁₂|b⟩₃)/√2 that ties a
/// Bell pair to a single qubit: reading qubit 3 in the {|a⟩,|b⟩} basis tells
/// which Bell state qubits 1 and 2 are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GhzLikeSpec {
    pub psi1: BellKind,
    pub psi2: BellKind,
    pub a: Ket,
    pub b: Ket,
    pub sign: Sign,
}

impl Default for GhzLikeSpec {
    /// (|ψ+⟩|0⟩ + |ψ−⟩|1⟩)/√2
    fn default() -> Self {
        Self {
            psi1: BellKind::PsiPlus,
            psi2: BellKind::PsiMinus,
            a: Ket::Zero,
            b: Ket::One,
            sign: Sign::Plus,
        }
    }
}

impl GhzLikeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.psi1 == self.psi2 {
            return arg("GHZ-like state needs two different Bell states");
        }
        if self.a.basis() != self.b.basis() || self.a == self.b {
            return arg(format!(
                "|{}⟩ and |{}⟩ are not orthogonal",
                self.a.label(),
                self.b.label()
            ));
        }
        Ok(())
    }

    /// Basis that distinguishes |a⟩ from |b⟩.
    pub fn third_basis(&self) -> SingleBasis {
        self.a.basis()
    }

    /// Bell state of qubits 1,2 after qubit 3 is found in |a⟩ (`true`) or |b⟩.
    pub fn bell_given(&self, found_a: bool) -> BellKind {
        if found_a {
            self.psi1
        } else {
            self.psi2
        }
    }

    /// The same spec with ψ₁ and ψ₂ exchanged.
    pub fn swapped(&self) -> GhzLikeSpec {
        GhzLikeSpec {
            psi1: self.psi2,
            psi2: self.psi1,
            ..*self
        }
    }

    pub fn state(&self) -> Result<StateVector> {
        self.validate()?;
        let (b1, b2) = (self.psi1.amplitudes(), self.psi2.amplitudes());
        let (ka, kb) = (self.a.amplitudes(), self.b.amplitudes());
        let s = match self.sign {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        };
        let amps = (0..8)
            .map(|i| (b1[i & 3] * ka[i >> 2] + b2[i & 3] * kb[i >> 2] * s) * c(FRAC_1_SQRT_2, 0.0))
            .collect();
        StateVector::from_amplitudes(amps)
    }
}

impl fmt::Display for GhzLikeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(
            f,
            "({}|{}> {} {}|{}>)",
            self.psi1,
            self.a.label(),
            s,
            self.psi2,
            self.b.label()
        )
    }
}

/// Prepares one GHZ-like triple, returning qubits 1, 2 and 3.
pub fn make_ghz_like(spec: &GhzLikeSpec, reg: &mut Register) -> Result<[QubitId; 3]> {
    let q = reg.alloc_state(spec.state()?);
    Ok([q[0], q[1], q[2]])
}
