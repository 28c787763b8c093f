use thiserror::Error;

/// Errors raised by the simulator, the protocol engine and the analysis helpers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register capacity exceeded: {requested} qubits requested, cap is {cap}")]
    Capacity { requested: usize, cap: usize },

    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    Index { index: usize, num_qubits: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("protocol state violation: {0}")]
    ProtocolState(String),

    #[error("impossible measurement outcome: {0}")]
    ImpossibleOutcome(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
