//! Run configuration and its TOML echo.

use serde::{Deserialize, Serialize};

use super::spec::{AttackSpec, MessageSpec};
use crate::error::{arg, Error, Result};
use crate::primitives::{DecoySubroutine, GvPlacement};
use crate::protocols::{Bits, ProtocolKind, SessionConfig, DEFAULT_THRESHOLD};

/// Default number of message units.
pub const DEFAULT_UNITS: usize = 8;

/// Everything that determines a `simulate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    /// Message units (qubits, pairs or triples).
    pub n: usize,
    pub message: MessageSpec,
    pub attack: Option<AttackSpec>,
    pub seed: u64,
    pub threshold: f64,
    pub trials: usize,
    pub decoy_mode: DecoySubroutine,
    pub gv_placement: GvPlacement,
    /// Redundant computational-basis qubits added to Alice's A-B sequence.
    pub redundant: usize,
    /// GHZ-like triples sacrificed to verify Charlie's source (P3, P4).
    pub sacrificed: usize,
}

impl RunConfig {
    /// Defaults for `protocol` with `n` units of a random message.
    pub fn new(protocol: ProtocolKind, n: usize) -> Self {
        Self {
            protocol,
            n,
            message: MessageSpec::Random,
            attack: None,
            seed: 0,
            threshold: DEFAULT_THRESHOLD,
            trials: 1,
            decoy_mode: protocol.default_decoys(),
            gv_placement: GvPlacement::WholePair,
            redundant: 0,
            sacrificed: 0,
        }
    }

    pub fn bits(&self) -> usize {
        self.n * self.protocol.bits_per_unit()
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig {
            threshold: self.threshold,
            decoy_mode: Some(self.decoy_mode),
            gv_placement: self.gv_placement,
            redundant: self.redundant,
            sacrificed: self.sacrificed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return arg("n must be at least 1");
        }
        if self.trials == 0 {
            return arg("trials must be at least 1");
        }
        if let MessageSpec::Fixed(m) = &self.message {
            let units = self.protocol.units_for(m.len())?;
            if units != self.n {
                return arg(format!(
                    "message {m} is {units} units of {}, but n = {}",
                    self.protocol, self.n
                ));
            }
        }
        self.session().validate(self.protocol)?;
        if let Some(a) = &self.attack {
            a.check_lengths(self.n, self.bits())?;
            a.resolve(self.bits(), &mut crate::rng::RngSeed(self.seed).stream(0))
                .validate(self.protocol)?;
        }
        Ok(())
    }

    /// The `[config]` table of a report.
    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            protocol: self.protocol.to_string(),
            n: self.n as u64,
            message: self.message.to_string(),
            attack: self.attack.as_ref().map(|a| a.to_string()),
            seed: self.seed.to_string(),
            threshold: self.threshold,
            trials: self.trials as u64,
            decoy_mode: self.decoy_mode.to_string(),
            gv_placement: self.gv_placement.to_string(),
            redundant: self.redundant as u64,
            sacrificed: self.sacrificed as u64,
        }
    }

    /// Reads a config from a TOML document: either a bare config table or a
    /// whole report, whose `[config]` table is used.
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        #[derive(Deserialize)]
        struct Wrapped {
            config: ConfigEcho,
        }
        let echo = match toml::from_str::<Wrapped>(text) {
            Ok(w) => w.config,
            Err(_) => toml::from_str::<ConfigEcho>(text)
                .map_err(|e| Error::Argument(format!("invalid config: {e}")))?,
        };
        echo.parse()
    }
}

/// Serialized form of [`RunConfig`]: every enum as its command-line spelling.
/// The seed is a string because TOML integers are signed 64-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub protocol: String,
    pub n: u64,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<String>,
    pub seed: String,
    pub threshold: f64,
    pub trials: u64,
    pub decoy_mode: String,
    pub gv_placement: String,
    #[serde(default)]
    pub redundant: u64,
    #[serde(default)]
    pub sacrificed: u64,
}

impl ConfigEcho {
    pub fn parse(&self) -> Result<RunConfig> {
        let seed = self
            .seed
            .parse()
            .map_err(|_| Error::Argument(format!("seed {:?} is not a u64", self.seed)))?;
        let cfg = RunConfig {
            protocol: self.protocol.parse()?,
            n: self.n as usize,
            message: self.message.parse()?,
            attack: self.attack.as_deref().map(str::parse).transpose()?,
            seed,
            threshold: self.threshold,
            trials: self.trials as usize,
            decoy_mode: self.decoy_mode.parse()?,
            gv_placement: self.gv_placement.parse()?,
            redundant: self.redundant as usize,
            sacrificed: self.sacrificed as usize,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Resolves `n` from a fixed message when the user gave none.
pub fn units_for_message(
    protocol: ProtocolKind,
    n: Option<usize>,
    message: &MessageSpec,
) -> Result<usize> {
    match (n, message) {
        (Some(n), _) => Ok(n),
        (None, MessageSpec::Fixed(m)) => protocol.units_for(m.len()),
        (None, MessageSpec::Random) => Ok(DEFAULT_UNITS),
    }
}

/// The message of one trial.
pub fn trial_message(cfg: &RunConfig, rng: &mut crate::rng::SimRng) -> Bits {
    match &cfg.message {
        MessageSpec::Fixed(m) => m.clone(),
        MessageSpec::Random => Bits::random(cfg.bits(), rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn message_length_must_match_n() {
        let mut cfg = RunConfig::new(ProtocolKind::P2, 3);
        cfg.message = "0110".parse().unwrap();
        assert!(cfg.validate().is_err());
        cfg.n = 2;
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn attack_compatibility_is_checked() {
        let mut cfg = RunConfig::new(ProtocolKind::P1, 6);
        cfg.attack = Some("alice-key-change".parse().unwrap());
        let e = cfg.validate().unwrap_err().to_string();
        assert!(e.contains("no key exists"), "{e}");
        cfg.protocol = ProtocolKind::Hyj;
        cfg.attack = Some("alice-key-change:K=0101".parse().unwrap());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn echo_accepts_whole_reports() {
        let cfg = RunConfig::new(ProtocolKind::P4, 4);
        let text = format!(
            "[report]\ncommand = \"simulate\"\n\n[config]\n{}",
            toml::to_string(&cfg.echo()).unwrap()
        );
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        assert!(RunConfig::from_toml("protocol = \"p9\"").is_err());
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            0usize..6,
            1usize..9,
            any::<u64>(),
            1usize..50,
            0.0f64..1.0,
            any::<bool>(),
            0usize..3,
        )
            .prop_map(|(p, n, seed, trials, threshold, fixed, redundant)| {
                let protocol = ProtocolKind::ALL[p];
                let mut cfg = RunConfig::new(protocol, n);
                cfg.seed = seed;
                cfg.trials = trials;
                cfg.threshold = threshold;
                cfg.redundant = redundant;
                if fixed {
                    cfg.message = MessageSpec::Fixed(Bits(
                        (0..cfg.bits())
                            .map(|i| (seed >> (i % 64)) & 1 == 1)
                            .collect(),
                    ));
                }
                if protocol == ProtocolKind::P1 {
                    cfg.attack = Some("intercept-resend:f=0.25,basis=x,leg=C-A".parse().unwrap());
                }
                cfg
            })
    }

    proptest! {
        #[test]
        fn config_echo_round_trips(cfg in arb_config()) {
            let text = toml::to_string(&cfg.echo()).unwrap();
            prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        }
    }
}
