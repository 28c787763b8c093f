use std::fmt;

use rand::Rng;

use super::{Gate, Ket, MeasBasis, Outcome, StateVector, MAX_QUBITS};
use crate::error::{arg, Error, Result};

/// Stable handle to one qubit of a [`Register`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId(pub(crate) u32);

impl QubitId {
    pub fn index(self) -> u32 {
        self.0
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Debug, Clone)]
struct Block {
    state: StateVector,
    qubits: Vec<QubitId>,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    block: usize,
    pos: usize,
}

/// Session-wide joint state held as a tensor product of small blocks.
///
/// Every qubit ever allocated keeps its handle. Measured qubits are split out of
/// their block and re-inserted as a fresh block holding the post-measurement
/// state, so they stay addressable (a measured-and-forwarded qubit is exactly a
/// freshly prepared one in the observed state).
#[derive(Debug, Clone, Default)]
pub struct Register {
    blocks: Vec<Option<Block>>,
    slots: Vec<Slot>,
}

impl Register {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of qubits ever allocated.
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Inserts an independent state and returns handles for its qubits in order.
    pub fn alloc_state(&mut self, state: StateVector) -> Vec<QubitId> {
        let block = self.blocks.len();
        let qubits: Vec<QubitId> = (0..state.num_qubits())
            .map(|pos| {
                let id = QubitId(self.slots.len() as u32);
                self.slots.push(Slot { block, pos });
                id
            })
            .collect();
        self.blocks.push(Some(Block {
            state,
            qubits: qubits.clone(),
        }));
        qubits
    }

    pub fn prepare(&mut self, ket: Ket) -> QubitId {
        self.alloc_state(StateVector::ket(ket))[0]
    }

    fn slot(&self, q: QubitId) -> Result<Slot> {
        self.slots.get(q.0 as usize).copied().ok_or(Error::Index {
            index: q.0 as usize,
            num_qubits: self.slots.len(),
        })
    }

    fn block_mut(&mut self, b: usize) -> &mut Block {
        self.blocks[b].as_mut().expect("live block")
    }

    fn block(&self, b: usize) -> &Block {
        self.blocks[b].as_ref().expect("live block")
    }

    /// Merges the block of `b` into the block of `a` (no-op when shared).
    fn merge(&mut self, a: QubitId, b: QubitId) -> Result<usize> {
        let (sa, sb) = (self.slot(a)?, self.slot(b)?);
        if sa.block == sb.block {
            return Ok(sa.block);
        }
        let size = self.block(sa.block).qubits.len() + self.block(sb.block).qubits.len();
        if size > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: size,
                cap: MAX_QUBITS,
            });
        }
        let other = self.blocks[sb.block].take().expect("live block");
        let target = self.block_mut(sa.block);
        let offset = target.qubits.len();
        target.state = target.state.tensor(&other.state)?;
        target.qubits.extend(&other.qubits);
        for (i, q) in other.qubits.iter().enumerate() {
            self.slots[q.0 as usize] = Slot {
                block: sa.block,
                pos: offset + i,
            };
        }
        Ok(sa.block)
    }

    pub fn apply_single(&mut self, q: QubitId, gate: impl Into<Gate>) -> Result<()> {
        let s = self.slot(q)?;
        self.block_mut(s.block).state.apply_single(gate, s.pos)
    }

    pub fn apply_cnot(&mut self, control: QubitId, target: QubitId) -> Result<()> {
        if control == target {
            return arg("CNOT control and target must differ");
        }
        let b = self.merge(control, target)?;
        let (c, t) = (
            self.slots[control.0 as usize].pos,
            self.slots[target.0 as usize].pos,
        );
        self.block_mut(b).state.apply_cnot(c, t)
    }

    /// Measures the given qubits (one for single-qubit bases, two for Bell).
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubits: &[QubitId],
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<Outcome> {
        if qubits.len() != basis.arity() {
            return arg(format!(
                "{basis:?} measurement needs {} qubit(s), got {}",
                basis.arity(),
                qubits.len()
            ));
        }
        if qubits.len() == 2 {
            if qubits[0] == qubits[1] {
                return arg("measurement targets must be distinct");
            }
            self.merge(qubits[0], qubits[1])?;
        }
        let b = self.slot(qubits[0])?.block;
        let positions: Vec<usize> = qubits
            .iter()
            .map(|q| self.slots[q.0 as usize].pos)
            .collect();
        let block = self.block_mut(b);
        let (outcome, local) = block.state.measure_detach(&positions, basis, rng)?;
        let remaining: Vec<QubitId> = block
            .qubits
            .iter()
            .copied()
            .filter(|q| !qubits.contains(q))
            .collect();
        block.qubits = remaining.clone();
        for (pos, q) in remaining.iter().enumerate() {
            self.slots[q.0 as usize] = Slot { block: b, pos };
        }
        if remaining.is_empty() {
            self.blocks[b] = None;
        }
        let nb = self.blocks.len();
        for (pos, q) in qubits.iter().enumerate() {
            self.slots[q.0 as usize] = Slot { block: nb, pos };
        }
        self.blocks.push(Some(Block {
            state: local,
            qubits: qubits.to_vec(),
        }));
        Ok(outcome)
    }

    /// Outcome probabilities without collapsing anything.
    pub fn probabilities(
        &self,
        qubits: &[QubitId],
        basis: MeasBasis,
    ) -> Result<Vec<(Outcome, f64)>> {
        let state = self.joint_state(&self.closure(qubits)?)?;
        let n = qubits.len();
        let targets: Vec<usize> = (0..n).collect();
        state.probabilities(&targets, basis)
    }

    /// The given qubits plus every qubit they are entangled with, listed
    /// starting with `qubits` themselves.
    fn closure(&self, qubits: &[QubitId]) -> Result<Vec<QubitId>> {
        let mut out: Vec<QubitId> = qubits.to_vec();
        for q in qubits {
            let s = self.slot(*q)?;
            for other in &self.block(s.block).qubits {
                if !out.contains(other) {
                    out.push(*other);
                }
            }
        }
        Ok(out)
    }

    /// Joint state of `qubits`, in the given order. The qubits must form a union
    /// of whole blocks (i.e. not be entangled with anything outside the list).
    pub fn joint_state(&self, qubits: &[QubitId]) -> Result<StateVector> {
        let mut blocks: Vec<usize> = Vec::new();
        for q in qubits {
            let s = self.slot(*q)?;
            if !blocks.contains(&s.block) {
                blocks.push(s.block);
            }
        }
        let mut order: Vec<QubitId> = Vec::new();
        let mut state = StateVector::new(0)?;
        for b in &blocks {
            let blk = self.block(*b);
            state = state.tensor(&blk.state)?;
            order.extend(&blk.qubits);
        }
        if order.len() != qubits.len() {
            return arg("requested qubits are entangled with qubits outside the list");
        }
        let perm: Vec<usize> = qubits
            .iter()
            .map(|q| order.iter().position(|o| o == q).expect("collected above"))
            .collect();
        state.permuted(&perm)
    }

    /// Qubits sharing a block with `q` (including `q`).
    pub fn entangled_with(&self, q: QubitId) -> Result<Vec<QubitId>> {
        let s = self.slot(q)?;
        Ok(self.block(s.block).qubits.clone())
    }

    /// Largest block currently held.
    pub fn max_block_size(&self) -> usize {
        self.blocks
            .iter()
            .flatten()
            .map(|b| b.qubits.len())
            .max()
            .unwrap_or(0)
    }

    pub fn is_normalized(&self) -> bool {
        self.blocks
            .iter()
            .flatten()
            .all(|b| b.state.is_normalized())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{BellKind, PauliOp, EXACT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn cnot_merges_blocks_and_builds_bell_pair() {
        let mut reg = Register::new();
        let a = reg.prepare(Ket::Plus);
        let b = reg.prepare(Ket::Zero);
        reg.apply_cnot(a, b).unwrap();
        let s = reg.joint_state(&[a, b]).unwrap();
        assert_eq!(s.bell_kind(), Some(BellKind::PsiPlus));
        assert_eq!(reg.entangled_with(a).unwrap().len(), 2);
    }

    #[test]
    fn joint_state_respects_requested_order() {
        let mut reg = Register::new();
        let a = reg.prepare(Ket::One);
        let b = reg.prepare(Ket::Zero);
        let s = reg.joint_state(&[b, a]).unwrap();
        let want = StateVector::ket(Ket::Zero)
            .tensor(&StateVector::ket(Ket::One))
            .unwrap();
        assert!(s.approx_eq_up_to_phase(&want, EXACT_TOL));
        let pair = reg.alloc_state(StateVector::bell(BellKind::PhiPlus));
        assert!(reg.joint_state(&pair[..1]).is_err());
    }

    #[test]
    fn bell_measurement_across_blocks_swaps_entanglement() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut reg = Register::new();
            let p = reg.alloc_state(StateVector::bell(BellKind::PsiPlus));
            let q = reg.alloc_state(StateVector::bell(BellKind::PsiPlus));
            let o = reg
                .measure(&[p[0], q[0]], MeasBasis::Bell, &mut rng)
                .unwrap();
            // the untouched halves end up in the same Bell state as the outcome
            let rest = reg.joint_state(&[p[1], q[1]]).unwrap();
            assert_eq!(rest.bell_kind(), o.bell());
            assert!(reg.max_block_size() <= 2);
            assert!(reg.is_normalized());
        }
    }

    #[test]
    fn measured_qubit_stays_addressable() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut reg = Register::new();
        let q = reg.prepare(Ket::Minus);
        let o = reg
            .measure(&[q], MeasBasis::Computational, &mut rng)
            .unwrap();
        let again = reg
            .measure(&[q], MeasBasis::Computational, &mut rng)
            .unwrap();
        assert_eq!(o, again);
        reg.apply_single(q, PauliOp::X).unwrap();
        let flipped = reg
            .measure(&[q], MeasBasis::Computational, &mut rng)
            .unwrap();
        assert_ne!(o, flipped);
    }

    #[test]
    fn probabilities_do_not_collapse() {
        let mut reg = Register::new();
        let p = reg.alloc_state(StateVector::bell(BellKind::PsiPlus));
        let pr = reg
            .probabilities(&[p[1]], MeasBasis::Computational)
            .unwrap();
        assert!((pr[0].1 - 0.5).abs() < EXACT_TOL);
        assert_eq!(reg.entangled_with(p[0]).unwrap().len(), 2);
    }

    #[test]
    fn unknown_handle_is_an_index_error() {
        let mut reg = Register::new();
        assert!(matches!(
            reg.apply_single(QubitId(7), PauliOp::X),
            Err(Error::Index { .. })
        ));
    }
}
