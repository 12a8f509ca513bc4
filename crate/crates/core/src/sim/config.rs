// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::edt::ThrottleMode;
use crate::netem::CostModel;
use crate::params::{LinkParams, NANOS_PER_SEC};

/// Which emulation mechanism an experiment runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatapathKind {
    /// Hash-map lookup plus departure-timestamp rewriting.
    EdtMap,
    /// Sequential per-link filter chain.
    FilterChain,
}

impl DatapathKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatapathKind::EdtMap => "edt-map",
            DatapathKind::FilterChain => "filter-chain",
        }
    }
}

impl fmt::Display for DatapathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatapathKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edt-map" => Ok(DatapathKind::EdtMap),
            "filter-chain" => Ok(DatapathKind::FilterChain),
            other => Err(format!("unknown datapath `{other}` (edt-map|filter-chain)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    LatencyProbe,
    ThroughputFlow,
    ConfigBench,
    BulkLoadBench,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExperimentError {
    #[error("match index {index} is out of range for {count} entries")]
    MatchIndexOutOfRange { index: usize, count: usize },
    #[error("emulation parameters given but no entry matches the probe")]
    EmulationWithoutMatch,
    #[error("experiment needs emulation parameters")]
    MissingEmulation,
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub datapath: DatapathKind,
    /// Map entries or filters installed on the device under test.
    pub entry_count: usize,
    /// Position of the entry matching the probe; `None` means no match.
    pub match_index: Option<usize>,
    /// Parameters of the matching entry.
    pub emulated: Option<LinkParams>,
    pub probe: ProbeKind,
    /// Virtual run time in nanoseconds.
    pub duration_ns: u64,
    /// Bytes per packet for throughput flows.
    pub packet_length: u32,
    pub baseline_rtt_ns: u64,
    /// Bytes per second.
    pub line_rate: u64,
    pub seed: u64,
    pub cost_model: CostModel,
    pub throttle_mode: ThrottleMode,
    /// Most packets the sender may have inside the datapath at once.
    pub queue_limit: usize,
    /// Uniform +/- spread applied to each probe's baseline RTT.
    pub baseline_jitter_ns: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datapath: DatapathKind::EdtMap,
            entry_count: 0,
            match_index: None,
            emulated: None,
            probe: ProbeKind::LatencyProbe,
            duration_ns: 60 * NANOS_PER_SEC,
            packet_length: 1500,
            baseline_rtt_ns: 300_000,
            line_rate: 575_000_000,
            seed: 42,
            cost_model: CostModel::default(),
            throttle_mode: ThrottleMode::Clamped,
            queue_limit: 1000,
            baseline_jitter_ns: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if let Some(index) = self.match_index {
            if index >= self.entry_count {
                return Err(ExperimentError::MatchIndexOutOfRange {
                    index,
                    count: self.entry_count,
                });
            }
        } else if self.emulated.is_some() {
            return Err(ExperimentError::EmulationWithoutMatch);
        }
        if self.packet_length == 0 {
            return Err(ExperimentError::Invalid("packet length must be positive"));
        }
        if self.line_rate == 0 {
            return Err(ExperimentError::Invalid("line rate must be positive"));
        }
        if self.queue_limit == 0 {
            return Err(ExperimentError::Invalid("queue limit must be positive"));
        }
        if self.baseline_jitter_ns > self.baseline_rtt_ns {
            return Err(ExperimentError::Invalid("jitter exceeds baseline RTT"));
        }
        Ok(())
    }

    /// Parameters the matching entry carries when no emulation is requested.
    pub(crate) fn matched_params(&self) -> LinkParams {
        self.emulated.unwrap_or(LinkParams::with_latency(0))
    }
}
