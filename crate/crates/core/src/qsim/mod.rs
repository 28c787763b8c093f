//! Pure-state quantum simulation.
//!
//! Two layers live here:
//!
//! * [`StateVector`] is a dense complex amplitude vector over `n` qubits with
//!   single-qubit gates, CNOT, inner products and projective measurement in the
//!   computational, diagonal and Bell bases.
//! * [`Register`] is the session-wide joint state. It stores the global state as
//!   a tensor product of independent [`StateVector`] blocks addressed by stable
//!   [`QubitId`] handles, merging blocks when a gate or a joint measurement spans
//!   two of them and splitting measured qubits back out. Mathematically it is one
//!   global state vector; the factoring keeps desk-scale protocol runs (hundreds
//!   of qubits, almost all of them in small entangled clusters) tractable.
//!
//! Conventions:
//!
//! * Qubit indexing is little-endian: qubit `k` is bit `k` of the amplitude index.
//! * Ket labels are written with qubit 0 leftmost, so `|01⟩` means qubit 0 is `0`
//!   and qubit 1 is `1` (amplitude index 2).
//! * Bell states use ψ± = (|00⟩ ± |11⟩)/√2 and φ± = (|01⟩ ± |10⟩)/√2.
//! * States that differ only by a global phase are considered equal; see
//!   [`StateVector::approx_eq_up_to_phase`].

mod register;
mod state;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

pub use register::{QubitId, Register};
pub use state::StateVector;

use crate::error::{Error, Result};

/// Largest number of qubits a single [`StateVector`] may hold.
pub const MAX_QUBITS: usize = 24;

/// Tolerance for norms and probabilities.
pub const PROB_TOL: f64 = 1e-9;

/// Tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;

pub(crate) const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The four single-qubit states of the two conjugate bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ket {
    Zero,
    One,
    Plus,
    Minus,
}

impl Ket {
    pub const ALL: [Ket; 4] = [Ket::Zero, Ket::One, Ket::Plus, Ket::Minus];

    pub fn from_basis_bit(basis: SingleBasis, bit: bool) -> Ket {
        match (basis, bit) {
            (SingleBasis::Computational, false) => Ket::Zero,
            (SingleBasis::Computational, true) => Ket::One,
            (SingleBasis::Diagonal, false) => Ket::Plus,
            (SingleBasis::Diagonal, true) => Ket::Minus,
        }
    }

    pub fn basis(self) -> SingleBasis {
        match self {
            Ket::Zero | Ket::One => SingleBasis::Computational,
            Ket::Plus | Ket::Minus => SingleBasis::Diagonal,
        }
    }

    /// Bit value inside the basis: `|0⟩` and `|+⟩` carry 0, `|1⟩` and `|−⟩` carry 1.
    pub fn bit(self) -> bool {
        matches!(self, Ket::One | Ket::Minus)
    }

    /// The orthogonal partner inside the same basis.
    pub fn flipped(self) -> Ket {
        Ket::from_basis_bit(self.basis(), !self.bit())
    }

    pub fn amplitudes(self) -> [Complex64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            Ket::Zero => [c(1.0, 0.0), c(0.0, 0.0)],
            Ket::One => [c(0.0, 0.0), c(1.0, 0.0)],
            Ket::Plus => [c(h, 0.0), c(h, 0.0)],
            Ket::Minus => [c(h, 0.0), c(-h, 0.0)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Ket::Zero => "0",
            Ket::One => "1",
            Ket::Plus => "+",
            Ket::Minus => "-",
        }
    }

    /// Two-bit code (basis, value) used in serialized announcements.
    pub fn code(self) -> u8 {
        match self {
            Ket::Zero => 0,
            Ket::One => 1,
            Ket::Plus => 2,
            Ket::Minus => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Ket> {
        Ket::ALL
            .get(code as usize)
            .copied()
            .ok_or_else(|| Error::Argument(format!("ket code {code} out of range")))
    }
}

/// Single-qubit measurement bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingleBasis {
    Computational,
    Diagonal,
}

impl SingleBasis {
    pub fn meas(self) -> MeasBasis {
        match self {
            SingleBasis::Computational => MeasBasis::Computational,
            SingleBasis::Diagonal => MeasBasis::Diagonal,
        }
    }

    pub fn other(self) -> SingleBasis {
        match self {
            SingleBasis::Computational => SingleBasis::Diagonal,
            SingleBasis::Diagonal => SingleBasis::Computational,
        }
    }
}

/// Pauli operators used for message encoding. `IY` is the real matrix
/// `[[0, 1], [-1, 0]]`, i.e. `i·Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliOp {
    I,
    X,
    IY,
    Z,
}

impl PauliOp {
    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::IY, PauliOp::Z];

    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        match self {
            PauliOp::I => [[one, zero], [zero, one]],
            PauliOp::X => [[zero, one], [one, zero]],
            PauliOp::IY => [[zero, one], [-one, zero]],
            PauliOp::Z => [[one, zero], [zero, -one]],
        }
    }
}

/// Gates accepted by [`StateVector::apply_single`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    Pauli(PauliOp),
    Hadamard,
}

impl Gate {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        match self {
            Gate::Pauli(p) => p.matrix(),
            Gate::Hadamard => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
        }
    }
}

impl From<PauliOp> for Gate {
    fn from(p: PauliOp) -> Self {
        Gate::Pauli(p)
    }
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellKind {
    /// (|00⟩ + |11⟩)/√2
    PsiPlus,
    /// (|00⟩ − |11⟩)/√2
    PsiMinus,
    /// (|01⟩ + |10⟩)/√2
    PhiPlus,
    /// (|01⟩ − |10⟩)/√2
    PhiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
    ];

    /// Amplitudes over the two-qubit index (little-endian).
    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = FRAC_1_SQRT_2;
        let z = c(0.0, 0.0);
        // index = q0 + 2*q1; |01⟩ (q0=0,q1=1) is index 2, |10⟩ is index 1
        match self {
            BellKind::PsiPlus => [c(h, 0.0), z, z, c(h, 0.0)],
            BellKind::PsiMinus => [c(h, 0.0), z, z, c(-h, 0.0)],
            BellKind::PhiPlus => [z, c(h, 0.0), c(h, 0.0), z],
            BellKind::PhiMinus => [z, c(-h, 0.0), c(h, 0.0), z],
        }
    }

    /// Whether the state is one of the ψ pair (|00⟩,|11⟩ support).
    pub fn is_psi(self) -> bool {
        matches!(self, BellKind::PsiPlus | BellKind::PsiMinus)
    }

    pub fn is_plus(self) -> bool {
        matches!(self, BellKind::PsiPlus | BellKind::PhiPlus)
    }

    pub fn label(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::Argument(format!("unknown Bell state {s:?}")))
    }
}

/// Projective measurement bases. `Bell` acts on exactly two qubits, the others
/// on exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasBasis {
    Computational,
    Diagonal,
    Bell,
}

impl MeasBasis {
    pub fn arity(self) -> usize {
        match self {
            MeasBasis::Bell => 2,
            _ => 1,
        }
    }

    /// Outcomes in sampling order together with their (local) eigenstates.
    pub(crate) fn projectors(self) -> Vec<(Outcome, Vec<Complex64>)> {
        match self {
            MeasBasis::Computational => vec![
                (Outcome::Zero, Ket::Zero.amplitudes().to_vec()),
                (Outcome::One, Ket::One.amplitudes().to_vec()),
            ],
            MeasBasis::Diagonal => vec![
                (Outcome::Plus, Ket::Plus.amplitudes().to_vec()),
                (Outcome::Minus, Ket::Minus.amplitudes().to_vec()),
            ],
            MeasBasis::Bell => BellKind::ALL
                .into_iter()
                .map(|k| (Outcome::Bell(k), k.amplitudes().to_vec()))
                .collect(),
        }
    }
}

/// Result label of a projective measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Zero,
    One,
    Plus,
    Minus,
    Bell(BellKind),
}

impl Outcome {
    /// Bit value for single-qubit outcomes (`0`/`+` → false, `1`/`−` → true).
    pub fn bit(self) -> Option<bool> {
        match self {
            Outcome::Zero | Outcome::Plus => Some(false),
            Outcome::One | Outcome::Minus => Some(true),
            Outcome::Bell(_) => None,
        }
    }

    pub fn bell(self) -> Option<BellKind> {
        match self {
            Outcome::Bell(k) => Some(k),
            _ => None,
        }
    }

    /// The post-measurement single-qubit state, if this is a single-qubit outcome.
    pub fn ket(self) -> Option<Ket> {
        match self {
            Outcome::Zero => Some(Ket::Zero),
            Outcome::One => Some(Ket::One),
            Outcome::Plus => Some(Ket::Plus),
            Outcome::Minus => Some(Ket::Minus),
            Outcome::Bell(_) => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Zero => "0",
            Outcome::One => "1",
            Outcome::Plus => "+",
            Outcome::Minus => "-",
            Outcome::Bell(k) => k.label(),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
