use thiserror::Error;

use crate::topology::Node;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("topology is disconnected: node {0} cannot reach the destination")]
    Disconnected(Node),
    #[error("infeasible graph dimensions: n={n}, e={e}")]
    InfeasibleDimensions { n: usize, e: usize },
    #[error("invalid bloom parameters: m={m}, k={k}")]
    InvalidBloomParams { m: usize, k: usize },
    #[error("index {index} out of range for filter of {m} bits")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("no key for node {0}")]
    MissingKey(Node),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("missing learning packet for node {0}")]
    MissingPacket(Node),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("neighbour counts violate handshake parity (degree sum {0} is odd)")]
    Parity(usize),
    #[error("enumeration cap exceeded: {what} needs {needed} > cap {cap}")]
    CapExceeded { what: &'static str, needed: u128, cap: u128 },
    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("{path}:{line}: {msg}")]
    Config { path: String, line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
