//! Session transcripts and their one-event-per-line text form.
//!
//! ```text
//! SEND from=Charlie to=Alice leg=C-A roles=MMMM qubits=0,1,2,3
//! ANNOUNCE from=Alice topic=decoy-positions auth=1 counted=0 idx=2,5
//! CHECK leg=A-B kind=decoy errors=0 checked=4 pass=1
//! DECODE by=Bob bits=1001
//! ```
//!
//! Qubit handles and index payloads are lowercase hexadecimal; bit payloads are
//! `0`/`1` strings.

use std::fmt;
use std::str::FromStr;

use super::{Bits, Leg, PartyId};
use crate::error::{arg, Error, Result};

/// Subject of a classical announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Topic {
    /// Which received qubits are used for the first check (CLZ family).
    CheckPositions,
    /// Preparation states of those qubits.
    CheckStates,
    /// Positions (and GV partners) of decoys in a sequence.
    DecoyPositions,
    /// Preparation states of BB84 decoys.
    DecoyStates,
    /// Charlie's initial states of the message qubits (CLZ family).
    InitialStates,
    /// Alice's one-time-pad key (HYJ).
    Key,
    /// Alice's permutation of the message qubits (P1).
    Permutation,
    /// Alice's order of message qubits inside her outgoing sequence (P2, P4).
    MessageOrder,
    /// Charlie's permutation (P2, P3).
    ControllerPermutation,
    /// Alice's same/different bits (P3).
    Relation,
    /// Which GHZ-like family each triple was drawn from (P4).
    Family,
    /// Charlie's measurement outcomes on the retained qubits (P4).
    ControllerOutcomes,
    /// Outcomes of the sacrificed-triple source verification.
    SourceCheck,
}

impl Topic {
    pub const ALL: [Topic; 13] = [
        Topic::CheckPositions,
        Topic::CheckStates,
        Topic::DecoyPositions,
        Topic::DecoyStates,
        Topic::InitialStates,
        Topic::Key,
        Topic::Permutation,
        Topic::MessageOrder,
        Topic::ControllerPermutation,
        Topic::Relation,
        Topic::Family,
        Topic::ControllerOutcomes,
        Topic::SourceCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::CheckPositions => "check-positions",
            Topic::CheckStates => "check-states",
            Topic::DecoyPositions => "decoy-positions",
            Topic::DecoyStates => "decoy-states",
            Topic::InitialStates => "initial-states",
            Topic::Key => "key",
            Topic::Permutation => "permutation",
            Topic::MessageOrder => "message-order",
            Topic::ControllerPermutation => "controller-permutation",
            Topic::Relation => "relation",
            Topic::Family => "family",
            Topic::ControllerOutcomes => "controller-outcomes",
            Topic::SourceCheck => "source-check",
        }
    }
}

impl FromStr for Topic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Topic::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown topic {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Bits(Bits),
    Indices(Vec<usize>),
}

impl Payload {
    pub fn indices(&self) -> Option<&[usize]> {
        match self {
            Payload::Indices(v) => Some(v),
            Payload::Bits(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    /// BB84 or GV decoys.
    Decoy,
    /// Redundant qubits of known computational value.
    Redundant,
    /// Bob's readout agrees with what Alice actually sent.
    Consistency,
    /// Sacrificed GHZ-like triples match the advertised state.
    Source,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Decoy => "decoy",
            CheckKind::Redundant => "redundant",
            CheckKind::Consistency => "consistency",
            CheckKind::Source => "source",
        }
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            CheckKind::Decoy,
            CheckKind::Redundant,
            CheckKind::Consistency,
            CheckKind::Source,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::Argument(format!("unknown check kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Send {
        from: PartyId,
        to: PartyId,
        leg: Leg,
        roles: String,
        qubits: Vec<u32>,
    },
    Announce {
        from: PartyId,
        topic: Topic,
        payload: Payload,
        authenticated: bool,
        counted: u64,
    },
    Check {
        leg: Leg,
        kind: CheckKind,
        errors: usize,
        checked: usize,
        pass: bool,
    },
    Decode {
        by: PartyId,
        bits: Bits,
    },
}

fn hex_list<T: fmt::LowerHex>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| format!("{i:x}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_hex_list(s: &str) -> Result<Vec<u64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            u64::from_str_radix(x, 16).map_err(|e| Error::Argument(format!("bad hex {x:?}: {e}")))
        })
        .collect()
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Send {
                from,
                to,
                leg,
                roles,
                qubits,
            } => {
                write!(
                    f,
                    "SEND from={from} to={to} leg={leg} roles={roles} qubits={}",
                    hex_list(qubits)
                )
            }
            Event::Announce {
                from,
                topic,
                payload,
                authenticated,
                counted,
            } => {
                write!(
                    f,
                    "ANNOUNCE from={from} topic={} auth={} counted={counted} ",
                    topic.as_str(),
                    u8::from(*authenticated)
                )?;
                match payload {
                    Payload::Bits(b) => write!(f, "bits={b}"),
                    Payload::Indices(v) => write!(f, "idx={}", hex_list(v)),
                }
            }
            Event::Check {
                leg,
                kind,
                errors,
                checked,
                pass,
            } => write!(
                f,
                "CHECK leg={leg} kind={} errors={errors} checked={checked} pass={}",
                kind.as_str(),
                u8::from(*pass)
            ),
            Event::Decode { by, bits } => write!(f, "DECODE by={by} bits={bits}"),
        }
    }
}

/// `key=value` fields of one line, in order.
struct Fields<'a>(Vec<(&'a str, &'a str)>);

impl<'a> Fields<'a> {
    fn get(&self, key: &str) -> Result<&'a str> {
        self.0
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Argument(format!("missing field {key:?}")))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.get(key)?;
        v.parse()
            .map_err(|e| Error::Argument(format!("field {key}={v:?}: {e}")))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key)? {
            "1" => Ok(true),
            "0" => Ok(false),
            other => arg(format!("field {key} must be 0 or 1, got {other:?}")),
        }
    }
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut parts = line.split(' ');
        let kind = parts.next().unwrap_or_default();
        let fields = Fields(
            parts
                .map(|p| {
                    p.split_once('=')
                        .ok_or_else(|| Error::Argument(format!("malformed field {p:?}")))
                })
                .collect::<Result<_>>()?,
        );
        match kind {
            "SEND" => Ok(Event::Send {
                from: fields.parse("from")?,
                to: fields.parse("to")?,
                leg: fields.parse("leg")?,
                roles: fields.get("roles")?.to_string(),
                qubits: parse_hex_list(fields.get("qubits")?)?
                    .into_iter()
                    .map(|q| {
                        u32::try_from(q)
                            .map_err(|_| Error::Argument(format!("qubit handle {q:x} too large")))
                    })
                    .collect::<Result<_>>()?,
            }),
            "ANNOUNCE" => {
                let payload = match (fields.get("bits"), fields.get("idx")) {
                    (Ok(b), _) => Payload::Bits(b.parse()?),
                    (_, Ok(i)) => Payload::Indices(
                        parse_hex_list(i)?.into_iter().map(|x| x as usize).collect(),
                    ),
                    _ => return arg("announcement without payload"),
                };
                Ok(Event::Announce {
                    from: fields.parse("from")?,
                    topic: fields.get("topic")?.parse()?,
                    payload,
                    authenticated: fields.flag("auth")?,
                    counted: fields.parse("counted")?,
                })
            }
            "CHECK" => Ok(Event::Check {
                leg: fields.parse("leg")?,
                kind: fields.get("kind")?.parse()?,
                errors: fields.parse("errors")?,
                checked: fields.parse("checked")?,
                pass: fields.flag("pass")?,
            }),
            "DECODE" => Ok(Event::Decode {
                by: fields.parse("by")?,
                bits: fields.get("bits")?.parse()?,
            }),
            other => arg(format!("unknown event kind {other:?}")),
        }
    }
}

/// Ordered record of a session: quantum sends, classical announcements,
/// checks and Bob's decode. Announcements are public; Eve never authors events.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(&mut self, e: Event) -> Result<()> {
        let author = match &e {
            Event::Send { from, .. } | Event::Announce { from, .. } => Some(*from),
            Event::Decode { by, .. } => Some(*by),
            Event::Check { .. } => None,
        };
        if author == Some(PartyId::Eve) {
            return Err(Error::ProtocolState(
                "Eve cannot author transcript events".into(),
            ));
        }
        self.events.push(e);
        Ok(())
    }

    /// Latest announcement on `topic`, if any.
    pub fn announcement(&self, topic: Topic) -> Option<&Payload> {
        self.events.iter().rev().find_map(|e| match e {
            Event::Announce {
                topic: t, payload, ..
            } if *t == topic => Some(payload),
            _ => None,
        })
    }

    pub fn checks(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Check { .. }))
    }

    /// Checks the structural invariants: no event authored by Eve, and every
    /// quantum send is followed by a check on its leg before Bob decodes.
    pub fn validate(&self) -> Result<()> {
        let decode_at = self
            .events
            .iter()
            .position(|e| matches!(e, Event::Decode { .. }));
        for (i, e) in self.events.iter().enumerate() {
            match e {
                Event::Send {
                    from: PartyId::Eve, ..
                }
                | Event::Announce {
                    from: PartyId::Eve, ..
                }
                | Event::Decode {
                    by: PartyId::Eve, ..
                } => {
                    return Err(Error::ProtocolState(format!(
                        "event {i} is authored by Eve"
                    )));
                }
                Event::Send { leg, .. } => {
                    if let Some(d) = decode_at {
                        let checked = self.events[i + 1..d]
                            .iter()
                            .any(|c| matches!(c, Event::Check { leg: l, .. } if l == leg));
                        if !checked {
                            return Err(Error::ProtocolState(format!(
                                "send on {leg} (event {i}) is not checked before the decode"
                            )));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Transcript> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        Ok(Transcript { events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Transcript {
        let mut t = Transcript::new();
        t.push(Event::Send {
            from: PartyId::Charlie,
            to: PartyId::Alice,
            leg: Leg::CharlieAlice,
            roles: "MD".into(),
            qubits: vec![0, 26],
        })
        .unwrap();
        t.push(Event::Announce {
            from: PartyId::Charlie,
            topic: Topic::DecoyPositions,
            payload: Payload::Indices(vec![1]),
            authenticated: true,
            counted: 0,
        })
        .unwrap();
        t.push(Event::Check {
            leg: Leg::CharlieAlice,
            kind: CheckKind::Decoy,
            errors: 0,
            checked: 1,
            pass: true,
        })
        .unwrap();
        t.push(Event::Decode {
            by: PartyId::Bob,
            bits: "1".parse().unwrap(),
        })
        .unwrap();
        t
    }

    #[test]
    fn text_format() {
        let text = sample().to_text();
        assert_eq!(
            text,
            "SEND from=Charlie to=Alice leg=C-A roles=MD qubits=0,1a\n\
             ANNOUNCE from=Charlie topic=decoy-positions auth=1 counted=0 idx=1\n\
             CHECK leg=C-A kind=decoy errors=0 checked=1 pass=1\n\
             DECODE by=Bob bits=1\n"
        );
        assert_eq!(Transcript::parse(&text).unwrap(), sample());
    }

    #[test]
    fn eve_is_never_an_author() {
        let mut t = Transcript::new();
        let e = Event::Decode {
            by: PartyId::Eve,
            bits: Bits::zeros(1),
        };
        assert!(t.push(e.clone()).is_err());
        let forged = Transcript::parse(&format!("{e}\n")).unwrap();
        assert!(forged.validate().is_err());
    }

    #[test]
    fn unchecked_send_before_decode_is_invalid() {
        let mut t = sample();
        t.events.insert(
            3,
            Event::Send {
                from: PartyId::Alice,
                to: PartyId::Bob,
                leg: Leg::AliceBob,
                roles: String::new(),
                qubits: vec![],
            },
        );
        assert!(t.validate().is_err());
        assert!(sample().validate().is_ok());
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!("SEND from=Charlie".parse::<Event>().is_err());
        assert!("HELLO x=1".parse::<Event>().is_err());
        assert!("CHECK leg=A-B kind=decoy errors=0 checked=1 pass=2"
            .parse::<Event>()
            .is_err());
    }

    fn arb_party() -> impl Strategy<Value = PartyId> {
        prop_oneof![
            Just(PartyId::Alice),
            Just(PartyId::Bob),
            Just(PartyId::Charlie)
        ]
    }

    fn arb_leg() -> impl Strategy<Value = Leg> {
        proptest::sample::select(Leg::ALL.to_vec())
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        let bits = proptest::collection::vec(any::<bool>(), 0..20).prop_map(Bits);
        prop_oneof![
            (
                arb_party(),
                arb_party(),
                arb_leg(),
                "[MDR]{0,12}",
                proptest::collection::vec(any::<u32>(), 0..12)
            )
                .prop_map(|(from, to, leg, roles, qubits)| Event::Send {
                    from,
                    to,
                    leg,
                    roles,
                    qubits
                }),
            (
                arb_party(),
                proptest::sample::select(Topic::ALL.to_vec()),
                prop_oneof![
                    bits.clone().prop_map(Payload::Bits),
                    proptest::collection::vec(0usize..100_000, 0..10).prop_map(Payload::Indices)
                ],
                any::<bool>(),
                0u64..1000
            )
                .prop_map(|(from, topic, payload, authenticated, counted)| {
                    Event::Announce {
                        from,
                        topic,
                        payload,
                        authenticated,
                        counted,
                    }
                }),
            (arb_leg(), 0usize..50, 0usize..50, any::<bool>()).prop_map(
                |(leg, errors, checked, pass)| {
                    Event::Check {
                        leg,
                        kind: CheckKind::Decoy,
                        errors,
                        checked,
                        pass,
                    }
                }
            ),
            (arb_party(), bits).prop_map(|(by, bits)| Event::Decode { by, bits }),
        ]
    }

    proptest! {
        #[test]
        fn text_round_trip(events in proptest::collection::vec(arb_event(), 0..20)) {
            let t = Transcript { events };
            prop_assert_eq!(Transcript::parse(&t.to_text()).unwrap(), t);
        }
    }
}
