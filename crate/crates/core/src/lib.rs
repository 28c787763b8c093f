//! Seedable simulator for quantum online-shopping protocols.
//!
//! A buyer (Alice) sends an order to a merchant (Bob) through quantum channels
//! under the control of a payment controller (Charlie). The crate simulates six
//! such protocols end to end on a pure-state quantum simulator, lets outside
//! eavesdroppers and dishonest participants attack them, and measures qubit
//! efficiency, detection statistics and the intercept-resend security threshold.
//!
//! Modules, bottom up:
//!
//! * [`qsim`]: state vectors, gates, measurements and the session register.
//! * [`primitives`]: particle sequences, permutations, entangled states,
//!   encoders and decoy checks.
//! * [`protocols`]: the six protocol state machines and their transcripts.
//! * [`adversary`]: outsider and participant attack strategies.
//! * [`analysis`]: efficiency, entropy, threshold and statistics helpers.
//! * [`experiments`]: seeded Monte-Carlo drivers shared by the CLI and tests.
//! * [`cli`]: the `qshop` command-line front end.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod primitives;
pub mod protocols;
pub mod qsim;
pub mod rng;

pub use error::{Error, Result};
