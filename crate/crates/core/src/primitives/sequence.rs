use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::qsim::QubitId;

/// What a slot of a traveling sequence is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Message,
    Decoy,
    Redundant,
}

impl Role {
    pub fn code(self) -> char {
        match self {
            Role::Message => 'M',
            Role::Decoy => 'D',
            Role::Redundant => 'R',
        }
    }

    pub fn from_code(c: char) -> Result<Role> {
        match c {
            'M' => Ok(Role::Message),
            'D' => Ok(Role::Decoy),
            'R' => Ok(Role::Redundant),
            other => Err(Error::Argument(format!("unknown role code {other:?}"))),
        }
    }
}

/// One slot of a [`ParticleSequence`].
///
/// The role belongs to the slot and never changes. The qubit handle may be
/// swapped by whoever physically holds the sequence (an interceptor replacing
/// qubits with fakes), which is exactly what the checks are meant to catch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Particle {
    qubit: QubitId,
    role: Role,
    partner: Option<QubitId>,
    origin: &'static str,
}

impl Particle {
    pub fn new(qubit: QubitId, role: Role, origin: &'static str) -> Self {
        Self {
            qubit,
            role,
            partner: None,
            origin,
        }
    }

    pub fn with_partner(mut self, partner: QubitId) -> Self {
        self.partner = Some(partner);
        self
    }

    pub fn qubit(&self) -> QubitId {
        self.qubit
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn partner(&self) -> Option<QubitId> {
        self.partner
    }

    pub fn origin(&self) -> &'static str {
        self.origin
    }
}

/// Ordered qubits as they travel on a channel.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParticleSequence {
    entries: Vec<Particle>,
}

impl ParticleSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_particles(entries: Vec<Particle>) -> Self {
        Self { entries }
    }

    /// Message-role sequence over `qubits`.
    pub fn messages(qubits: &[QubitId], origin: &'static str) -> Self {
        Self {
            entries: qubits
                .iter()
                .map(|&q| Particle::new(q, Role::Message, origin))
                .collect(),
        }
    }

    pub fn push(&mut self, p: Particle) {
        self.entries.push(p);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Particle> {
        self.entries.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Particle> {
        self.entries.iter()
    }

    pub fn particles(&self) -> &[Particle] {
        &self.entries
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        self.entries.iter().map(|p| p.qubit).collect()
    }

    pub fn positions(&self, role: Role) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, p)| p.role == role)
            .map(|(i, _)| i)
            .collect()
    }

    /// Qubits in message slots, in slot order.
    pub fn message_qubits(&self) -> Vec<QubitId> {
        self.entries
            .iter()
            .filter(|p| p.role == Role::Message)
            .map(|p| p.qubit)
            .collect()
    }

    /// Drops every decoy and redundant slot, keeping message order.
    pub fn strip_checks(&self) -> ParticleSequence {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|p| p.role == Role::Message)
                .cloned()
                .collect(),
        }
    }

    /// Puts a different physical qubit into slot `i`.
    pub fn replace_qubit(&mut self, i: usize, qubit: QubitId) -> Result<()> {
        let n = self.entries.len();
        let p = self.entries.get_mut(i).ok_or(Error::Index {
            index: i,
            num_qubits: n,
        })?;
        p.qubit = qubit;
        p.partner = None;
        Ok(())
    }

    /// Role codes, one character per slot (`M`, `D`, `R`).
    pub fn role_string(&self) -> String {
        self.entries.iter().map(|p| p.role.code()).collect()
    }
}

/// Checks that partner links are symmetric among all particles of `seqs`.
/// Partners held outside the given sequences are ignored.
pub fn partners_symmetric(seqs: &[&ParticleSequence]) -> bool {
    let by_qubit: HashMap<QubitId, &Particle> = seqs
        .iter()
        .flat_map(|s| s.entries.iter())
        .map(|p| (p.qubit, p))
        .collect();
    by_qubit.values().all(|p| match p.partner {
        Some(other) => by_qubit
            .get(&other)
            .is_none_or(|o| o.partner == Some(p.qubit)),
        None => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(i: u32) -> QubitId {
        QubitId(i)
    }

    #[test]
    fn strip_keeps_message_order() {
        let seq = ParticleSequence::from_particles(vec![
            Particle::new(q(0), Role::Message, "t"),
            Particle::new(q(1), Role::Decoy, "t"),
            Particle::new(q(2), Role::Message, "t"),
            Particle::new(q(3), Role::Redundant, "t"),
        ]);
        assert_eq!(seq.role_string(), "MDMR");
        assert_eq!(seq.strip_checks().qubits(), vec![q(0), q(2)]);
        assert_eq!(seq.positions(Role::Decoy), vec![1]);
    }

    #[test]
    fn partner_symmetry() {
        let a = ParticleSequence::from_particles(vec![
            Particle::new(q(0), Role::Message, "t").with_partner(q(1))
        ]);
        let b = ParticleSequence::from_particles(vec![
            Particle::new(q(1), Role::Message, "t").with_partner(q(0))
        ]);
        assert!(partners_symmetric(&[&a, &b]));
        let c = ParticleSequence::from_particles(vec![
            Particle::new(q(1), Role::Message, "t").with_partner(q(5))
        ]);
        assert!(!partners_symmetric(&[&a, &c]));
        // partner held elsewhere
        assert!(partners_symmetric(&[&a]));
    }

    #[test]
    fn replace_keeps_role() {
        let mut seq = ParticleSequence::messages(&[q(0), q(1)], "t");
        seq.replace_qubit(1, q(9)).unwrap();
        assert_eq!(seq.qubits(), vec![q(0), q(9)]);
        assert_eq!(seq.get(1).unwrap().role(), Role::Message);
        assert!(seq.replace_qubit(2, q(3)).is_err());
    }
}
