// SPDX-License-Identifier: Apache-2.0

//! Per-link emulation parameters and the keys they are stored under.
//!
//! Rates are kept in bytes per second so that they pair directly with
//! byte-denominated packet lengths when computing inter-packet gaps.
//! Latencies are nanoseconds.

use std::fmt;
use std::net::Ipv4Addr;
use std::num::NonZeroU64;

use crate::error::ParamsError;

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

/// Emulation settings for one link: an optional rate limit and an optional
/// added one-way latency. At least one of the two is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkParams {
    rate: Option<NonZeroU64>,
    latency: Option<u64>,
}

impl LinkParams {
    /// `rate` is in bytes per second, `latency` in nanoseconds.
    pub fn new(rate: Option<u64>, latency: Option<u64>) -> Result<Self, ParamsError> {
        let rate = match rate {
            Some(r) => Some(NonZeroU64::new(r).ok_or(ParamsError::ZeroRate)?),
            None => None,
        };
        if rate.is_none() && latency.is_none() {
            return Err(ParamsError::EmptyParams);
        }
        Ok(Self { rate, latency })
    }

    pub fn with_latency(latency_ns: u64) -> Self {
        Self {
            rate: None,
            latency: Some(latency_ns),
        }
    }

    pub fn with_rate(rate: NonZeroU64) -> Self {
        Self {
            rate: Some(rate),
            latency: None,
        }
    }

    pub fn with_rate_and_latency(rate: NonZeroU64, latency_ns: u64) -> Self {
        Self {
            rate: Some(rate),
            latency: Some(latency_ns),
        }
    }

    /// Rate limit in bytes per second.
    pub fn rate(&self) -> Option<NonZeroU64> {
        self.rate
    }

    /// Added latency in nanoseconds.
    pub fn latency(&self) -> Option<u64> {
        self.latency
    }
}

/// Key for both the emulation map and the timestamp map.
///
/// A destination-only key never compares equal to a pair key, even for the
/// same destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    dst: Ipv4Addr,
    src: Option<Ipv4Addr>,
}

impl FlowKey {
    pub fn dst(dst: Ipv4Addr) -> Self {
        Self { dst, src: None }
    }

    pub fn pair(src: Ipv4Addr, dst: Ipv4Addr) -> Self {
        Self {
            dst,
            src: Some(src),
        }
    }

    pub fn destination(&self) -> Ipv4Addr {
        self.dst
    }

    pub fn source(&self) -> Option<Ipv4Addr> {
        self.src
    }

    pub fn is_pair(&self) -> bool {
        self.src.is_some()
    }

    pub fn mode(&self) -> KeyMode {
        if self.is_pair() {
            KeyMode::Pair
        } else {
            KeyMode::Destination
        }
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.src {
            Some(src) => write!(f, "{src}->{}", self.dst),
            None => write!(f, "*->{}", self.dst),
        }
    }
}

/// How a map derives keys from packets. Fixed for the lifetime of a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KeyMode {
    /// Key on the destination address only.
    #[default]
    Destination,
    /// Key on the (source, destination) pair.
    Pair,
}

impl KeyMode {
    pub fn key_for(self, src: Ipv4Addr, dst: Ipv4Addr) -> FlowKey {
        match self {
            KeyMode::Destination => FlowKey::dst(dst),
            KeyMode::Pair => FlowKey::pair(src, dst),
        }
    }
}

/// One directed link from a configuration file or a generated mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkSpec {
    src: Ipv4Addr,
    dst: Ipv4Addr,
    params: LinkParams,
}

impl LinkSpec {
    pub fn new(src: Ipv4Addr, dst: Ipv4Addr, params: LinkParams) -> Result<Self, ParamsError> {
        if src == dst {
            return Err(ParamsError::SelfLink(src));
        }
        Ok(Self { src, dst, params })
    }

    pub fn src(&self) -> Ipv4Addr {
        self.src
    }

    pub fn dst(&self) -> Ipv4Addr {
        self.dst
    }

    pub fn params(&self) -> LinkParams {
        self.params
    }

    pub fn key(&self, mode: KeyMode) -> FlowKey {
        mode.key_for(self.src, self.dst)
    }
}
