use num_complex::Complex64;
use rand::Rng;

use super::{c, BellKind, Gate, Ket, MeasBasis, Outcome, MAX_QUBITS, PROB_TOL};
use crate::error::{arg, Error, Result};

/// Dense pure state over `num_qubits` qubits (little-endian indexing).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` over `n` qubits. `n = 0` gives the scalar register `[1]`.
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: n,
                cap: MAX_QUBITS,
            });
        }
        let mut amps = vec![c(0.0, 0.0); 1 << n];
        amps[0] = c(1.0, 0.0);
        Ok(Self {
            num_qubits: n,
            amps,
        })
    }

    /// Builds a state from raw amplitudes. The length must be a power of two and
    /// the vector must already be normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return arg(format!(
                "amplitude vector length {len} is not a power of two"
            ));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: n,
                cap: MAX_QUBITS,
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > PROB_TOL {
            return arg(format!("amplitudes are not normalized (norm² = {norm})"));
        }
        Ok(Self {
            num_qubits: n,
            amps,
        })
    }

    pub fn ket(k: Ket) -> Self {
        Self {
            num_qubits: 1,
            amps: k.amplitudes().to_vec(),
        }
    }

    pub fn bell(kind: BellKind) -> Self {
        Self {
            num_qubits: 2,
            amps: kind.amplitudes().to_vec(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `self ⊗ other`, with `self` occupying the low qubit indices.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::Capacity {
                requested: n,
                cap: MAX_QUBITS,
            });
        }
        let mut amps = Vec::with_capacity(1 << n);
        for b in &other.amps {
            for a in &self.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector {
            num_qubits: n,
            amps,
        })
    }

    fn check_index(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(Error::Index {
                index: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    pub fn apply_single(&mut self, gate: impl Into<Gate>, target: usize) -> Result<()> {
        self.check_index(target)?;
        let m = gate.into().matrix();
        let bit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_index(control)?;
        self.check_index(target)?;
        if control == target {
            return arg("CNOT control and target must differ");
        }
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
        Ok(())
    }

    /// Standard Hermitian inner product ⟨self|other⟩.
    pub fn inner_product(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return arg(format!(
                "inner product of {}-qubit and {}-qubit states",
                self.num_qubits, other.num_qubits
            ));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Equality up to a global phase: |⟨a|b⟩| = 1 within `tol`.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        match self.inner_product(other) {
            Ok(ip) => (ip.norm() - 1.0).abs() < tol,
            Err(_) => false,
        }
    }

    /// Identifies a two-qubit state as one of the Bell states (up to phase).
    pub fn bell_kind(&self) -> Option<BellKind> {
        if self.num_qubits != 2 {
            return None;
        }
        BellKind::ALL
            .into_iter()
            .find(|k| self.approx_eq_up_to_phase(&StateVector::bell(*k), 1e-9))
    }

    /// Reorders qubits so that new qubit `j` is old qubit `order[j]`.
    pub fn permuted(&self, order: &[usize]) -> Result<StateVector> {
        let n = self.num_qubits;
        let mut seen = vec![false; n];
        if order.len() != n
            || order
                .iter()
                .any(|&q| q >= n || std::mem::replace(&mut seen[q], true))
        {
            return arg("qubit reordering must be a permutation of all qubits");
        }
        let mut amps = vec![c(0.0, 0.0); self.amps.len()];
        for (old, a) in self.amps.iter().enumerate() {
            let mut new = 0usize;
            for (j, &q) in order.iter().enumerate() {
                new |= ((old >> q) & 1) << j;
            }
            amps[new] = *a;
        }
        Ok(StateVector {
            num_qubits: n,
            amps,
        })
    }

    fn check_targets(&self, targets: &[usize], basis: MeasBasis) -> Result<()> {
        if targets.len() != basis.arity() {
            return arg(format!(
                "{basis:?} measurement needs {} target(s), got {}",
                basis.arity(),
                targets.len()
            ));
        }
        for (i, &t) in targets.iter().enumerate() {
            self.check_index(t)?;
            if targets[..i].contains(&t) {
                return arg("measurement targets must be distinct");
            }
        }
        Ok(())
    }

    /// Contracts the target qubits against `local` (⟨local|_targets ⊗ I) and
    /// returns the unnormalized state of the remaining qubits, in ascending order.
    fn project(&self, targets: &[usize], local: &[Complex64]) -> Vec<Complex64> {
        let rest: Vec<usize> = (0..self.num_qubits)
            .filter(|q| !targets.contains(q))
            .collect();
        let mut out = vec![c(0.0, 0.0); 1 << rest.len()];
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let l = gather(i, targets);
            let r = gather(i, &rest);
            out[r] += local[l].conj() * a;
        }
        out
    }

    /// Born-rule probabilities for each outcome of `basis` on `targets`.
    pub fn probabilities(
        &self,
        targets: &[usize],
        basis: MeasBasis,
    ) -> Result<Vec<(Outcome, f64)>> {
        self.check_targets(targets, basis)?;
        Ok(basis
            .projectors()
            .into_iter()
            .map(|(o, v)| {
                let p = self.project(targets, &v).iter().map(|a| a.norm_sqr()).sum();
                (o, p)
            })
            .collect())
    }

    fn sample<R: Rng + ?Sized>(
        &self,
        targets: &[usize],
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<(Outcome, Vec<Complex64>, Vec<Complex64>)> {
        self.check_targets(targets, basis)?;
        let branches: Vec<_> = basis
            .projectors()
            .into_iter()
            .map(|(o, v)| {
                let rem = self.project(targets, &v);
                let p: f64 = rem.iter().map(|a| a.norm_sqr()).sum();
                (o, v, rem, p)
            })
            .collect();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = None;
        for (idx, b) in branches.iter().enumerate() {
            acc += b.3;
            if b.3 > 0.0 && u < acc {
                chosen = Some(idx);
                break;
            }
        }
        // u landed in rounding slack past the final cumulative sum
        let idx = chosen.unwrap_or_else(|| {
            branches
                .iter()
                .rposition(|b| b.3 > PROB_TOL)
                .expect("state has zero norm")
        });
        let (o, v, rem, p) = branches.into_iter().nth(idx).expect("index in range");
        let scale = 1.0 / p.sqrt();
        let rem = rem.into_iter().map(|a| a * scale).collect();
        Ok((o, v, rem))
    }

    /// Measures `targets` in `basis`, collapsing the state in place (the register
    /// keeps its size). Bell measurements take two targets, the others one.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        targets: &[usize],
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<Outcome> {
        let (o, local, rem) = self.sample(targets, basis, rng)?;
        let rest: Vec<usize> = (0..self.num_qubits)
            .filter(|q| !targets.contains(q))
            .collect();
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = local[gather(i, targets)] * rem[gather(i, &rest)];
        }
        Ok(o)
    }

    /// Measures `targets` and removes them from the state. Returns the outcome and
    /// the post-measurement state of the measured qubits (in `targets` order);
    /// `self` keeps the remaining qubits in ascending order.
    pub(crate) fn measure_detach<R: Rng + ?Sized>(
        &mut self,
        targets: &[usize],
        basis: MeasBasis,
        rng: &mut R,
    ) -> Result<(Outcome, StateVector)> {
        let (o, local, rem) = self.sample(targets, basis, rng)?;
        let k = targets.len();
        self.num_qubits -= k;
        self.amps = rem;
        Ok((
            o,
            StateVector {
                num_qubits: k,
                amps: local,
            },
        ))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < PROB_TOL
    }

    #[cfg(test)]
    pub(crate) fn is_close(&self, other: &StateVector) -> bool {
        self.num_qubits == other.num_qubits
            && self
                .amps
                .iter()
                .zip(&other.amps)
                .all(|(a, b)| (a - b).norm() < super::EXACT_TOL)
    }
}

/// Packs the bits of `index` at `positions` into a compact integer
/// (bit `j` of the result is bit `positions[j]` of `index`).
fn gather(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &p)| acc | (((index >> p) & 1) << j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{PauliOp, EXACT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(11)
    }

    #[test]
    fn new_register_is_all_zero() {
        let s = StateVector::new(1).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let s = StateVector::new(2).unwrap();
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
        let s = StateVector::new(0).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0)]);
    }

    #[test]
    fn capacity_is_enforced() {
        assert!(matches!(
            StateVector::new(MAX_QUBITS + 1),
            Err(Error::Capacity { .. })
        ));
        let big = StateVector::new(MAX_QUBITS - 1).unwrap();
        assert!(matches!(
            big.tensor(&StateVector::new(2).unwrap()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn single_gates_on_basis_states() {
        let mut s = StateVector::new(1).unwrap();
        s.apply_single(PauliOp::X, 0).unwrap();
        assert!(s.is_close(&StateVector::ket(Ket::One)));

        let mut s = StateVector::new(1).unwrap();
        s.apply_single(PauliOp::IY, 0).unwrap();
        assert_eq!(s.amplitudes(), &[c(0.0, 0.0), c(-1.0, 0.0)]);

        let mut s = StateVector::new(1).unwrap();
        s.apply_single(Gate::Hadamard, 0).unwrap();
        assert!(s.is_close(&StateVector::ket(Ket::Plus)));
    }

    #[test]
    fn x_on_both_halves_leaves_psi_plus() {
        let mut s = StateVector::bell(BellKind::PsiPlus);
        s.apply_single(PauliOp::X, 0).unwrap();
        s.apply_single(PauliOp::X, 1).unwrap();
        assert!(s.is_close(&StateVector::bell(BellKind::PsiPlus)));
    }

    #[test]
    fn index_errors() {
        let mut s = StateVector::new(2).unwrap();
        assert!(matches!(
            s.apply_single(PauliOp::X, 2),
            Err(Error::Index { index: 2, .. })
        ));
        assert!(matches!(s.apply_cnot(0, 0), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cnot(0, 5), Err(Error::Index { .. })));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        // |10⟩: qubit 0 (control) is 1
        let mut s = StateVector::ket(Ket::One)
            .tensor(&StateVector::ket(Ket::Zero))
            .unwrap();
        s.apply_cnot(0, 1).unwrap();
        let want = StateVector::ket(Ket::One)
            .tensor(&StateVector::ket(Ket::One))
            .unwrap();
        assert!(s.is_close(&want));
    }

    /// Brute-force oracle: parity of a Bell pair via two CNOTs into an ancilla,
    /// computed by explicit 8×8 permutation matrices instead of `apply_cnot`.
    fn ancilla_parity_oracle(kind: BellKind) -> [f64; 2] {
        let pair = kind.amplitudes();
        let mut full = [c(0.0, 0.0); 8];
        for (i, a) in pair.iter().enumerate() {
            full[i] = *a; // ancilla (qubit 2) starts in |0⟩
        }
        let cnot = |v: [Complex64; 8], ctrl: usize| {
            let mut out = [c(0.0, 0.0); 8];
            for (i, a) in v.iter().enumerate() {
                let j = if (i >> ctrl) & 1 == 1 { i ^ 0b100 } else { i };
                out[j] += *a;
            }
            out
        };
        let full = cnot(cnot(full, 0), 1);
        let p0: f64 = (0..4).map(|i| full[i].norm_sqr()).sum();
        [p0, 1.0 - p0]
    }

    #[test]
    fn cnot_parity_matches_oracle() {
        for kind in BellKind::ALL {
            let oracle = ancilla_parity_oracle(kind);
            let mut s = StateVector::bell(kind)
                .tensor(&StateVector::new(1).unwrap())
                .unwrap();
            s.apply_cnot(0, 2).unwrap();
            s.apply_cnot(1, 2).unwrap();
            let p = s.probabilities(&[2], MeasBasis::Computational).unwrap();
            assert!((p[0].1 - oracle[0]).abs() < EXACT_TOL);
            // even parity for ψ±, odd for φ±
            let want_even = if kind.is_psi() { 1.0 } else { 0.0 };
            assert!((p[0].1 - want_even).abs() < EXACT_TOL, "{kind}");
        }
    }

    #[test]
    fn deterministic_measurements() {
        let mut s = StateVector::ket(Ket::Plus);
        assert_eq!(
            s.measure(&[0], MeasBasis::Diagonal, &mut rng()).unwrap(),
            Outcome::Plus
        );
        for kind in BellKind::ALL {
            let mut s = StateVector::bell(kind);
            let o = s.measure(&[0, 1], MeasBasis::Bell, &mut rng()).unwrap();
            assert_eq!(o, Outcome::Bell(kind));
        }
    }

    #[test]
    fn measurement_arity_is_checked() {
        let mut s = StateVector::new(2).unwrap();
        assert!(matches!(
            s.measure(&[0], MeasBasis::Bell, &mut rng()),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            s.measure(&[0, 1], MeasBasis::Computational, &mut rng()),
            Err(Error::Argument(_))
        ));
        assert!(s.measure(&[1, 1], MeasBasis::Bell, &mut rng()).is_err());
    }

    #[test]
    fn zero_in_diagonal_basis_is_fair() {
        let mut r = rng();
        let trials = 10_000;
        let plus = (0..trials)
            .filter(|_| {
                let mut s = StateVector::new(1).unwrap();
                s.measure(&[0], MeasBasis::Diagonal, &mut r).unwrap() == Outcome::Plus
            })
            .count();
        let freq = plus as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn collapse_keeps_norm_and_partner() {
        let mut s = StateVector::bell(BellKind::PsiPlus);
        let o = s
            .measure(&[0], MeasBasis::Computational, &mut rng())
            .unwrap();
        assert!(s.is_normalized());
        let p = s.probabilities(&[1], MeasBasis::Computational).unwrap();
        let want = if o == Outcome::Zero { 1.0 } else { 0.0 };
        assert!((p[0].1 - want).abs() < EXACT_TOL);
    }

    #[test]
    fn detach_removes_measured_qubits() {
        let mut s = StateVector::bell(BellKind::PhiPlus)
            .tensor(&StateVector::ket(Ket::Minus))
            .unwrap();
        let (o, local) = s
            .measure_detach(&[0, 1], MeasBasis::Bell, &mut rng())
            .unwrap();
        assert_eq!(o, Outcome::Bell(BellKind::PhiPlus));
        assert_eq!(local.bell_kind(), Some(BellKind::PhiPlus));
        assert_eq!(s.num_qubits(), 1);
        assert!(s.approx_eq_up_to_phase(&StateVector::ket(Ket::Minus), EXACT_TOL));
    }

    #[test]
    fn inner_products() {
        let zero = StateVector::ket(Ket::Zero);
        let one = StateVector::ket(Ket::One);
        assert_eq!(zero.inner_product(&one).unwrap().norm(), 0.0);
        let pp = StateVector::bell(BellKind::PsiPlus);
        assert!((pp.inner_product(&pp).unwrap() - 1.0).norm() < EXACT_TOL);
        let fm = StateVector::bell(BellKind::PhiMinus);
        assert!(pp.inner_product(&fm).unwrap().norm() < EXACT_TOL);
        assert!(matches!(zero.inner_product(&pp), Err(Error::Argument(_))));
    }

    #[test]
    fn phase_insensitive_comparison() {
        let mut s = StateVector::ket(Ket::Plus);
        s.apply_single(PauliOp::IY, 0).unwrap();
        // iY|+⟩ = |−⟩ exactly; iY|−⟩ = −|+⟩
        assert!(s.approx_eq_up_to_phase(&StateVector::ket(Ket::Minus), EXACT_TOL));
        s.apply_single(PauliOp::IY, 0).unwrap();
        assert!(!s.is_close(&StateVector::ket(Ket::Plus)));
        assert!(s.approx_eq_up_to_phase(&StateVector::ket(Ket::Plus), EXACT_TOL));
    }

    #[test]
    fn permuted_swaps_qubits() {
        let s = StateVector::ket(Ket::One)
            .tensor(&StateVector::ket(Ket::Zero))
            .unwrap();
        let t = s.permuted(&[1, 0]).unwrap();
        let want = StateVector::ket(Ket::Zero)
            .tensor(&StateVector::ket(Ket::One))
            .unwrap();
        assert!(t.is_close(&want));
        assert!(s.permuted(&[0, 0]).is_err());
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 2]).is_err());
        assert!(StateVector::from_amplitudes(Ket::Minus.amplitudes().to_vec()).is_ok());
    }
}
