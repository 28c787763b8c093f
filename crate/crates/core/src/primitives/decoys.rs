//! Eavesdropping checks with decoy qubits.
//!
//! * BB84: single decoys drawn uniformly from {|0⟩,|1⟩,|+⟩,|−⟩}, checked by
//!   measuring in the preparation basis.
//! * GV: ψ+ pairs hidden among the travel qubits, checked by a Bell
//!   measurement once the positions (and partners) are disclosed.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::entangled::make_bell;
use super::sequence::{Particle, ParticleSequence, Role};
use super::Permutation;
use crate::error::{arg, Error, Result};
use crate::qsim::{BellKind, Ket, MeasBasis, Outcome, Register};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoySubroutine {
    Bb84,
    Gv,
}

impl fmt::Display for DecoySubroutine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoySubroutine::Bb84 => "bb84",
            DecoySubroutine::Gv => "gv",
        })
    }
}

impl FromStr for DecoySubroutine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb84" => Ok(Self::Bb84),
            "gv" => Ok(Self::Gv),
            other => arg(format!(
                "unknown decoy mode {other:?} (expected bb84 or gv)"
            )),
        }
    }
}

/// Where the two halves of a GV decoy pair travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GvPlacement {
    /// Both halves inside the same sequence.
    WholePair,
    /// One half in each of two sequences sent to different receivers.
    SplitPair,
}

impl fmt::Display for GvPlacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GvPlacement::WholePair => "whole-pair",
            GvPlacement::SplitPair => "split-pair",
        })
    }
}

impl FromStr for GvPlacement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whole-pair" => Ok(Self::WholePair),
            "split-pair" => Ok(Self::SplitPair),
            other => arg(format!(
                "unknown GV placement {other:?} (expected whole-pair or split-pair)"
            )),
        }
    }
}

/// A slot of one of the sequences a batch was inserted into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SlotRef {
    pub host: usize,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoyPrep {
    Bb84(Ket),
    Gv { kind: BellKind, partner: SlotRef },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoyRecord {
    pub slot: SlotRef,
    pub prep: DecoyPrep,
}

/// Everything the preparer needs to verify a set of inserted check qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoyBatch {
    pub subroutine: DecoySubroutine,
    pub records: Vec<DecoyRecord>,
}

impl DecoyBatch {
    pub fn empty(subroutine: DecoySubroutine) -> Self {
        Self {
            subroutine,
            records: Vec::new(),
        }
    }

    /// BB84 batch for qubits already in `host` at `positions`, prepared in `kets`.
    pub fn bb84_at(host: usize, positions: &[usize], kets: &[Ket]) -> Self {
        let records = positions
            .iter()
            .zip(kets)
            .map(|(&position, &k)| DecoyRecord {
                slot: SlotRef { host, position },
                prep: DecoyPrep::Bb84(k),
            })
            .collect();
        Self {
            subroutine: DecoySubroutine::Bb84,
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Every slot occupied by the batch in `host`, sorted.
    pub fn positions(&self, host: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .records
            .iter()
            .flat_map(|r| {
                let partner = match r.prep {
                    DecoyPrep::Gv { partner, .. } => Some(partner),
                    DecoyPrep::Bb84(_) => None,
                };
                std::iter::once(r.slot).chain(partner)
            })
            .filter(|s| s.host == host)
            .map(|s| s.position)
            .collect();
        out.sort_unstable();
        out
    }

    /// Updates positions in `host` after that sequence was reordered by `p`.
    pub fn remap(&mut self, host: usize, p: &Permutation) {
        let inv = p.inverse();
        let fix = |s: &mut SlotRef| {
            if s.host == host {
                s.position = inv.mapping()[s.position];
            }
        };
        for r in &mut self.records {
            fix(&mut r.slot);
            if let DecoyPrep::Gv { partner, .. } = &mut r.prep {
                fix(partner);
            }
        }
    }

    /// Updates positions in `host` after more particles were inserted into it.
    /// `before` and `after` are the host sequence before and after the
    /// insertion; slots are matched by qubit identity.
    pub fn reindex(
        &mut self,
        host: usize,
        before: &ParticleSequence,
        after: &ParticleSequence,
    ) -> Result<()> {
        let fix = |s: &mut SlotRef| -> Result<()> {
            if s.host != host {
                return Ok(());
            }
            let q = before
                .get(s.position)
                .ok_or_else(|| {
                    Error::ProtocolState(format!(
                        "check slot {}:{} does not exist",
                        s.host, s.position
                    ))
                })?
                .qubit();
            s.position = after.iter().position(|p| p.qubit() == q).ok_or_else(|| {
                Error::ProtocolState(format!("check qubit {q} vanished from host {host}"))
            })?;
            Ok(())
        };
        for r in &mut self.records {
            fix(&mut r.slot)?;
            if let DecoyPrep::Gv { partner, .. } = &mut r.prep {
                fix(partner)?;
            }
        }
        Ok(())
    }

    /// Appends the records of another batch.
    pub fn extend(&mut self, other: DecoyBatch) {
        self.records.extend(other.records);
    }
}

/// Result of verifying a batch: `errors` failed out of `checked` units
/// (one unit per BB84 decoy or per GV pair).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecoyCheck {
    pub errors: usize,
    pub checked: usize,
}

impl DecoyCheck {
    pub fn rate(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.errors as f64 / self.checked as f64
        }
    }

    pub fn merge(self, other: DecoyCheck) -> DecoyCheck {
        DecoyCheck {
            errors: self.errors + other.errors,
            checked: self.checked + other.checked,
        }
    }
}

/// Places `extra` at uniformly random distinct positions among `base`, keeping
/// the relative order of `base`. Returns the merged list and the final
/// position of each element of `extra`.
fn scatter<R: Rng + ?Sized>(
    base: Vec<Particle>,
    extra: Vec<Particle>,
    rng: &mut R,
) -> (Vec<Particle>, Vec<usize>) {
    let total = base.len() + extra.len();
    let mut positions = index::sample(rng, total, extra.len()).into_vec();
    positions.shuffle(rng);
    let mut slots: Vec<Option<Particle>> = vec![None; total];
    for (p, e) in positions.iter().zip(extra) {
        slots[*p] = Some(e);
    }
    let mut base = base.into_iter();
    let out = slots
        .into_iter()
        .map(|s| s.unwrap_or_else(|| base.next().expect("sizes add up")))
        .collect();
    (out, positions)
}

pub fn random_bb84_ket<R: Rng + ?Sized>(rng: &mut R) -> Ket {
    Ket::ALL[rng.random_range(0..4)]
}

/// Inserts `count` decoy qubits into `seq` at random positions.
///
/// BB84 inserts `count` single decoys. GV inserts `ceil(count / 2)` ψ+ pairs
/// with both halves in `seq`, randomly paired among the decoy slots.
pub fn insert_decoys<R: Rng + ?Sized>(
    seq: &ParticleSequence,
    host: usize,
    subroutine: DecoySubroutine,
    count: usize,
    reg: &mut Register,
    rng: &mut R,
) -> (ParticleSequence, DecoyBatch) {
    match subroutine {
        DecoySubroutine::Bb84 => {
            let kets: Vec<Ket> = (0..count).map(|_| random_bb84_ket(rng)).collect();
            let extra = kets
                .iter()
                .map(|&k| Particle::new(reg.prepare(k), Role::Decoy, "bb84-decoy"))
                .collect();
            let (out, pos) = scatter(seq.particles().to_vec(), extra, rng);
            (
                ParticleSequence::from_particles(out),
                DecoyBatch::bb84_at(host, &pos, &kets),
            )
        }
        DecoySubroutine::Gv => {
            let pairs = count.div_ceil(2);
            let mut extra = Vec::with_capacity(2 * pairs);
            for _ in 0..pairs {
                let (a, b) = make_bell(BellKind::PsiPlus, reg);
                extra.push(Particle::new(a, Role::Decoy, "gv-decoy").with_partner(b));
                extra.push(Particle::new(b, Role::Decoy, "gv-decoy").with_partner(a));
            }
            let (out, pos) = scatter(seq.particles().to_vec(), extra, rng);
            let records = pos
                .chunks_exact(2)
                .map(|c| DecoyRecord {
                    slot: SlotRef {
                        host,
                        position: c[0],
                    },
                    prep: DecoyPrep::Gv {
                        kind: BellKind::PsiPlus,
                        partner: SlotRef {
                            host,
                            position: c[1],
                        },
                    },
                })
                .collect();
            (
                ParticleSequence::from_particles(out),
                DecoyBatch {
                    subroutine,
                    records,
                },
            )
        }
    }
}

/// Inserts `pairs` ψ+ decoy pairs with one half in `a` (host `hosts.0`) and the
/// other half in `b` (host `hosts.1`).
pub fn insert_split_gv<R: Rng + ?Sized>(
    a: &ParticleSequence,
    b: &ParticleSequence,
    hosts: (usize, usize),
    pairs: usize,
    reg: &mut Register,
    rng: &mut R,
) -> (ParticleSequence, ParticleSequence, DecoyBatch) {
    let (mut ea, mut eb) = (Vec::with_capacity(pairs), Vec::with_capacity(pairs));
    for _ in 0..pairs {
        let (x, y) = make_bell(BellKind::PsiPlus, reg);
        ea.push(Particle::new(x, Role::Decoy, "gv-decoy").with_partner(y));
        eb.push(Particle::new(y, Role::Decoy, "gv-decoy").with_partner(x));
    }
    let (oa, pa) = scatter(a.particles().to_vec(), ea, rng);
    let (ob, pb) = scatter(b.particles().to_vec(), eb, rng);
    let records = pa
        .iter()
        .zip(&pb)
        .map(|(&x, &y)| DecoyRecord {
            slot: SlotRef {
                host: hosts.0,
                position: x,
            },
            prep: DecoyPrep::Gv {
                kind: BellKind::PsiPlus,
                partner: SlotRef {
                    host: hosts.1,
                    position: y,
                },
            },
        })
        .collect();
    (
        ParticleSequence::from_particles(oa),
        ParticleSequence::from_particles(ob),
        DecoyBatch {
            subroutine: DecoySubroutine::Gv,
            records,
        },
    )
}

/// Inserts `count` redundant qubits of known computational value at random positions.
pub fn insert_redundant<R: Rng + ?Sized>(
    seq: &ParticleSequence,
    host: usize,
    count: usize,
    reg: &mut Register,
    rng: &mut R,
) -> (ParticleSequence, DecoyBatch) {
    let kets: Vec<Ket> = (0..count)
        .map(|_| if rng.random() { Ket::One } else { Ket::Zero })
        .collect();
    let extra = kets
        .iter()
        .map(|&k| Particle::new(reg.prepare(k), Role::Redundant, "redundant"))
        .collect();
    let (out, pos) = scatter(seq.particles().to_vec(), extra, rng);
    (
        ParticleSequence::from_particles(out),
        DecoyBatch::bb84_at(host, &pos, &kets),
    )
}

fn check_slot<'a>(hosts: &[&'a ParticleSequence], s: SlotRef) -> Result<&'a Particle> {
    let p = hosts
        .get(s.host)
        .and_then(|h| h.get(s.position))
        .ok_or_else(|| {
            Error::ProtocolState(format!(
                "check slot {}:{} does not exist",
                s.host, s.position
            ))
        })?;
    if p.role() == Role::Message {
        return Err(Error::ProtocolState(format!(
            "slot {}:{} holds a message qubit, not a check qubit",
            s.host, s.position
        )));
    }
    Ok(p)
}

/// Measures every check qubit of `batch` in its preparation basis (Bell basis
/// for GV pairs) and counts mismatches. The measured qubits are consumed.
pub fn verify_decoys<R: Rng + ?Sized>(
    hosts: &[&ParticleSequence],
    batch: &DecoyBatch,
    reg: &mut Register,
    rng: &mut R,
) -> Result<DecoyCheck> {
    let mut check = DecoyCheck::default();
    for r in &batch.records {
        let q = check_slot(hosts, r.slot)?.qubit();
        let ok = match r.prep {
            DecoyPrep::Bb84(k) => reg.measure(&[q], k.basis().meas(), rng)?.ket() == Some(k),
            DecoyPrep::Gv { kind, partner } => {
                let p = check_slot(hosts, partner)?.qubit();
                reg.measure(&[q, p], MeasBasis::Bell, rng)? == Outcome::Bell(kind)
            }
        };
        check.checked += 1;
        if !ok {
            check.errors += 1;
        }
    }
    Ok(check)
}
