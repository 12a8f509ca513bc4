// SPDX-License-Identifier: Apache-2.0

use std::net::Ipv4Addr;

use thiserror::Error;

use crate::params::KeyMode;

/// Errors raised by the emulation parameter store and topology helpers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("link parameters need a rate, a latency, or both")]
    EmptyParams,
    #[error("rate must be positive")]
    ZeroRate,
    #[error("link {0} -> {0} connects an address to itself")]
    SelfLink(Ipv4Addr),
    #[error("emulation map is full ({capacity} entries)")]
    CapacityExceeded { capacity: usize },
    #[error("key does not match the map key mode ({expected:?})")]
    KeyModeMismatch { expected: KeyMode },
    #[error("duplicate address {0} in mesh")]
    DuplicateAddress(Ipv4Addr),
    #[error("a mesh needs at least 2 addresses, got {0}")]
    MeshTooSmall(usize),
}

/// What went wrong on a single configuration line.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigErrorKind {
    #[error("expected `<src> <dst> [rate=..] [delay=..]`")]
    MissingAddress,
    #[error("malformed address `{0}`")]
    BadAddress(String),
    #[error("unparseable rate `{0}`")]
    BadRate(String),
    #[error("unparseable delay `{0}`")]
    BadDelay(String),
    #[error("rate `{0}` is not a whole number of bytes per second")]
    FractionalRate(String),
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{0}` given twice")]
    DuplicateField(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// A configuration parse failure, tagged with the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ConfigError {
    pub line: usize,
    pub kind: ConfigErrorKind,
}
