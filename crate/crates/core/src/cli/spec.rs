//! Text forms of messages and attack strategies used on the command line and in
//! report config echoes.
//!
//! An attack spec is `name[:key=value,...]`:
//!
//! | spec | parameters |
//! |---|---|
//! | `intercept-resend` | `f` fraction attacked (default 1), `basis` = `random`, `z` or `x` |
//! | `entangle-measure` | `beta2` = \|β\|² (default 0.5) |
//! | `correlation-elicitation`, `x-flip` | none |
//! | `charlie-fake-sequence`, `bob-premature-decode` | none |
//! | `alice-key-change` | `K` padding key (random when omitted), `Kp` announced key (K with one random bit flipped when omitted) |
//! | `alice-wrong-permutation` | `pi` announced mapping, dot-separated (random when omitted) |
//! | `charlie-wrong-state` | `psi1`, `psi2`, `a`, `b`, `sign` of the prepared state |
//!
//! Outsider attacks also take `leg` (`C-A`, `C-A2`, `C-B`, `A-B`). Display
//! renders the canonical form, which parses back to the same spec.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::adversary::{Attack, AttackKind, BasisPolicy};
use crate::error::{arg, Error, Result};
use crate::primitives::{GhzLikeSpec, Permutation, Sign};
use crate::protocols::{Bits, Leg};
use crate::qsim::{Ket, SingleBasis};
use crate::rng::SimRng;

/// The order Alice sends: fixed, or drawn per trial from the harness stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageSpec {
    Random,
    Fixed(Bits),
}

impl fmt::Display for MessageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MessageSpec::Random => f.write_str("random"),
            MessageSpec::Fixed(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for MessageSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("random") {
            return Ok(MessageSpec::Random);
        }
        let bits: Bits = s.parse()?;
        if bits.is_empty() {
            return arg("message must not be empty");
        }
        Ok(MessageSpec::Fixed(bits))
    }
}

/// Attack names accepted by [`AttackSpec`], in matrix order.
pub const ATTACK_NAMES: [&str; 9] = [
    "intercept-resend",
    "entangle-measure",
    "correlation-elicitation",
    "x-flip",
    "charlie-fake-sequence",
    "alice-key-change",
    "alice-wrong-permutation",
    "bob-premature-decode",
    "charlie-wrong-state",
];

/// A parsed attack strategy whose random parameters are fixed per trial by
/// [`AttackSpec::resolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub kind: SpecKind,
    pub leg: Option<Leg>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecKind {
    InterceptResend {
        fraction: f64,
        policy: BasisPolicy,
    },
    EntangleMeasure {
        beta_sq: f64,
    },
    CorrelationElicitation,
    XFlip,
    CharlieFakeSequence,
    AliceKeyChange {
        key: Option<Bits>,
        announced: Option<Bits>,
    },
    AliceWrongPermutation {
        announced: Option<Permutation>,
    },
    BobPrematureDecode,
    CharlieWrongState {
        prepared: GhzLikeSpec,
    },
}

impl SpecKind {
    /// Whether this is a channel (Eve) attack rather than a dishonest party.
    pub fn is_outsider(&self) -> bool {
        matches!(
            self,
            SpecKind::InterceptResend { .. }
                | SpecKind::EntangleMeasure { .. }
                | SpecKind::CorrelationElicitation
                | SpecKind::XFlip
        )
    }
}

impl AttackSpec {
    pub fn name(&self) -> &'static str {
        match self.kind {
            SpecKind::InterceptResend { .. } => "intercept-resend",
            SpecKind::EntangleMeasure { .. } => "entangle-measure",
            SpecKind::CorrelationElicitation => "correlation-elicitation",
            SpecKind::XFlip => "x-flip",
            SpecKind::CharlieFakeSequence => "charlie-fake-sequence",
            SpecKind::AliceKeyChange { .. } => "alice-key-change",
            SpecKind::AliceWrongPermutation { .. } => "alice-wrong-permutation",
            SpecKind::BobPrematureDecode => "bob-premature-decode",
            SpecKind::CharlieWrongState { .. } => "charlie-wrong-state",
        }
    }

    /// Concrete attack for one trial with an `n_bits`-bit message. A missing
    /// padding key is drawn at random; a missing announced key is the padding
    /// key with one random bit flipped.
    pub fn resolve(&self, n_bits: usize, rng: &mut SimRng) -> Attack {
        let kind = match &self.kind {
            SpecKind::InterceptResend { fraction, policy } => AttackKind::InterceptResend {
                policy: *policy,
                fraction: *fraction,
            },
            SpecKind::EntangleMeasure { beta_sq } => {
                AttackKind::EntangleMeasure { beta_sq: *beta_sq }
            }
            SpecKind::CorrelationElicitation => AttackKind::CorrelationElicitation,
            SpecKind::XFlip => AttackKind::XFlipAll,
            SpecKind::CharlieFakeSequence => AttackKind::CharlieFakeSequence,
            SpecKind::AliceKeyChange { key, announced } => {
                let key = key.clone().unwrap_or_else(|| Bits::random(n_bits, rng));
                let announced = announced.clone().unwrap_or_else(|| {
                    let mut a = key.clone();
                    if !a.is_empty() {
                        let i = rng.random_range(0..a.len());
                        a.0[i] = !a.0[i];
                    }
                    a
                });
                AttackKind::AliceKeyChange {
                    key: Some(key),
                    announced,
                }
            }
            SpecKind::AliceWrongPermutation { announced } => AttackKind::AliceWrongPermutation {
                announced: announced.clone(),
            },
            SpecKind::BobPrematureDecode => AttackKind::BobPrematureDecode,
            SpecKind::CharlieWrongState { prepared } => AttackKind::CharlieWrongState {
                prepared: *prepared,
            },
        };
        let attack = Attack::new(kind);
        match self.leg {
            Some(l) => attack.on(l),
            None => attack,
        }
    }

    /// Checks explicit parameter lengths against a message of `units` units
    /// and `n_bits` bits.
    pub fn check_lengths(&self, units: usize, n_bits: usize) -> Result<()> {
        match &self.kind {
            SpecKind::AliceKeyChange { key, announced } => {
                for (what, b) in [("K", key), ("Kp", announced)] {
                    if let Some(b) = b {
                        if b.len() != n_bits {
                            return arg(format!(
                                "{what} has {} bits, the message has {n_bits}",
                                b.len()
                            ));
                        }
                    }
                }
            }
            SpecKind::AliceWrongPermutation { announced: Some(p) } if p.len() != units => {
                return arg(format!(
                    "pi permutes {} items, the message has {units} units",
                    p.len()
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

fn ket_from_label(s: &str) -> Result<Ket> {
    Ket::ALL
        .into_iter()
        .find(|k| k.label() == s)
        .ok_or_else(|| Error::Argument(format!("unknown single-qubit state {s:?}")))
}

fn sign_label(s: Sign) -> char {
    match s {
        Sign::Plus => '+',
        Sign::Minus => '-',
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Argument(format!("{key}={v:?} is not a number")))
}

fn parse_permutation(v: &str) -> Result<Permutation> {
    let mapping = v
        .split('.')
        .map(|x| {
            x.parse::<usize>()
                .map_err(|_| Error::Argument(format!("pi={v:?} is not a dot-separated mapping")))
        })
        .collect::<Result<Vec<_>>>()?;
    Permutation::new(mapping)
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let mut pairs = Vec::new();
        for item in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| {
                Error::Argument(format!("attack parameter {item:?} is not key=value"))
            })?;
            pairs.push((k.trim(), v.trim()));
        }
        let mut leg = None;
        let mut take = |key: &str| -> Option<&str> {
            pairs
                .iter()
                .position(|(k, _)| *k == key)
                .map(|i| pairs.remove(i).1)
        };
        if let Some(l) = take("leg") {
            leg = Some(l.parse()?);
        }
        let kind = match name {
            "intercept-resend" => {
                let fraction = take("f")
                    .map(|v| parse_f64("f", v))
                    .transpose()?
                    .unwrap_or(1.0);
                let policy = match take("basis").unwrap_or("random") {
                    "random" => BasisPolicy::Random,
                    "z" => BasisPolicy::Fixed(SingleBasis::Computational),
                    "x" => BasisPolicy::Fixed(SingleBasis::Diagonal),
                    other => return arg(format!("basis={other:?} (expected random, z or x)")),
                };
                SpecKind::InterceptResend { fraction, policy }
            }
            "entangle-measure" => SpecKind::EntangleMeasure {
                beta_sq: take("beta2")
                    .map(|v| parse_f64("beta2", v))
                    .transpose()?
                    .unwrap_or(0.5),
            },
            "correlation-elicitation" => SpecKind::CorrelationElicitation,
            "x-flip" => SpecKind::XFlip,
            "charlie-fake-sequence" => SpecKind::CharlieFakeSequence,
            "alice-key-change" => SpecKind::AliceKeyChange {
                key: take("K").map(str::parse).transpose()?,
                announced: take("Kp").map(str::parse).transpose()?,
            },
            "alice-wrong-permutation" => SpecKind::AliceWrongPermutation {
                announced: take("pi").map(parse_permutation).transpose()?,
            },
            "bob-premature-decode" => SpecKind::BobPrematureDecode,
            "charlie-wrong-state" => {
                let d = GhzLikeSpec::default().swapped();
                let prepared = GhzLikeSpec {
                    psi1: take("psi1").map(str::parse).transpose()?.unwrap_or(d.psi1),
                    psi2: take("psi2").map(str::parse).transpose()?.unwrap_or(d.psi2),
                    a: take("a").map(ket_from_label).transpose()?.unwrap_or(d.a),
                    b: take("b").map(ket_from_label).transpose()?.unwrap_or(d.b),
                    sign: match take("sign") {
                        None => d.sign,
                        Some("+") => Sign::Plus,
                        Some("-") => Sign::Minus,
                        Some(other) => return arg(format!("sign={other:?} (expected + or -)")),
                    },
                };
                prepared.validate()?;
                SpecKind::CharlieWrongState { prepared }
            }
            other => {
                return arg(format!(
                    "unknown attack {other:?} (expected one of {})",
                    ATTACK_NAMES.join(", ")
                ))
            }
        };
        if let Some((k, _)) = pairs.first() {
            return arg(format!("{name} takes no parameter {k:?}"));
        }
        let spec = AttackSpec { kind, leg };
        if spec.leg.is_some() && !spec.kind.is_outsider() {
            return arg(format!("{name} is not a channel attack and takes no leg"));
        }
        Ok(spec)
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut params: Vec<String> = Vec::new();
        match &self.kind {
            SpecKind::InterceptResend { fraction, policy } => {
                params.push(format!("f={fraction}"));
                params.push(format!("basis={policy}"));
            }
            SpecKind::EntangleMeasure { beta_sq } => params.push(format!("beta2={beta_sq}")),
            SpecKind::AliceKeyChange { key, announced } => {
                if let Some(k) = key {
                    params.push(format!("K={k}"));
                }
                if let Some(k) = announced {
                    params.push(format!("Kp={k}"));
                }
            }
            SpecKind::AliceWrongPermutation { announced: Some(p) } => {
                let m: Vec<String> = p.mapping().iter().map(usize::to_string).collect();
                params.push(format!("pi={}", m.join(".")));
            }
            SpecKind::CharlieWrongState { prepared } => {
                params.push(format!("psi1={}", prepared.psi1));
                params.push(format!("psi2={}", prepared.psi2));
                params.push(format!("a={}", prepared.a.label()));
                params.push(format!("b={}", prepared.b.label()));
                params.push(format!("sign={}", sign_label(prepared.sign)));
            }
            _ => {}
        }
        if let Some(l) = self.leg {
            params.push(format!("leg={l}"));
        }
        f.write_str(self.name())?;
        if !params.is_empty() {
            write!(f, ":{}", params.join(","))?;
        }
        Ok(())
    }
}
