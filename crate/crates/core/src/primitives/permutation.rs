use rand::seq::SliceRandom;
use rand::Rng;

use super::sequence::ParticleSequence;
use crate::error::{arg, Result};

/// Reordering of `n` items. Applying it produces `out[i] = input[mapping[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || std::mem::replace(&mut seen[m], true) {
                return arg(format!("{mapping:?} is not a permutation of 0..{n}"));
            }
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut mapping: Vec<usize> = (0..n).collect();
        mapping.shuffle(rng);
        Self { mapping }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    /// Number of positions `i` with `mapping[i] != i`.
    pub fn displaced(&self) -> usize {
        self.mapping
            .iter()
            .enumerate()
            .filter(|(i, m)| i != *m)
            .count()
    }

    pub fn apply<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        if items.len() != self.mapping.len() {
            return arg(format!(
                "permutation of length {} applied to {} items",
                self.mapping.len(),
                items.len()
            ));
        }
        Ok(self.mapping.iter().map(|&m| items[m].clone()).collect())
    }

    /// Undoes [`apply`](Self::apply).
    pub fn unapply<T: Clone>(&self, items: &[T]) -> Result<Vec<T>> {
        self.inverse().apply(items)
    }
}

/// Reorders a particle sequence; partner links travel with their particles.
pub fn apply_permutation(seq: &ParticleSequence, p: &Permutation) -> Result<ParticleSequence> {
    Ok(ParticleSequence::from_particles(p.apply(seq.particles())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{Particle, Role};
    use crate::qsim::QubitId;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn mapping_convention() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.apply(&['a', 'b', 'c']).unwrap(), vec!['c', 'a', 'b']);
        assert_eq!(p.unapply(&['c', 'a', 'b']).unwrap(), vec!['a', 'b', 'c']);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::identity(3).apply(&[1, 2]).is_err());
    }

    #[test]
    fn identity_leaves_sequence_alone() {
        let seq = ParticleSequence::from_particles(
            (0..4)
                .map(|i| Particle::new(QubitId(i), Role::Message, "t"))
                .collect(),
        );
        assert_eq!(
            apply_permutation(&seq, &Permutation::identity(4)).unwrap(),
            seq
        );
    }

    #[test]
    fn partners_follow_particles() {
        let seq = ParticleSequence::from_particles(vec![
            Particle::new(QubitId(0), Role::Decoy, "t").with_partner(QubitId(1)),
            Particle::new(QubitId(1), Role::Decoy, "t").with_partner(QubitId(0)),
            Particle::new(QubitId(2), Role::Message, "t"),
        ]);
        let out = apply_permutation(&seq, &Permutation::new(vec![2, 1, 0]).unwrap()).unwrap();
        assert_eq!(out.get(2).unwrap().partner(), Some(QubitId(1)));
        assert_eq!(out.get(1).unwrap().partner(), Some(QubitId(0)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn round_trip(seed in any::<u64>(), n in 0usize..40) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let p = Permutation::random(n, &mut rng);
            let items: Vec<usize> = (0..n).map(|i| i * 7 + 1).collect();
            let there = p.apply(&items).unwrap();
            prop_assert_eq!(p.unapply(&there).unwrap(), items.clone());
            prop_assert_eq!(p.inverse().inverse(), p.clone());
            let seq = ParticleSequence::from_particles(
                (0..n as u32).map(|i| Particle::new(QubitId(i), Role::Message, "t")).collect(),
            );
            let back = apply_permutation(&apply_permutation(&seq, &p).unwrap(), &p.inverse()).unwrap();
            prop_assert_eq!(back, seq);
        }
    }
}
