// SPDX-License-Identifier: Apache-2.0

//! Network emulation by departure-timestamp rewriting.
//!
//! Egress packets are matched against a hash map of per-destination link
//! parameters in constant time. Matching packets get a rate-limited and
//! delayed departure timestamp and wait in a timing wheel until it is due;
//! everything else passes through untouched. A cost model of the classic
//! per-link filter chain serves as the baseline, and [`sim`] runs both side
//! by side in virtual time.

pub mod config;
pub mod edt;
pub mod error;
pub mod map;
pub mod netem;
pub mod params;
pub mod sim;
pub mod topology;
pub mod wheel;

pub use config::{parse_link_config, render_link_spec};
pub use edt::{
    inject_delay, inter_packet_gap, set_departure, throttle, Packet, ThrottleMode, Verdict,
};
pub use error::{ConfigError, ConfigErrorKind, ParamsError};
pub use map::{EmulationMap, LoadReport, SharedEmulationMap, TimestampMap, DEFAULT_CAPACITY};
pub use netem::{netem_apply, ChainMatch, CostModel, Filter, FilterChain, TimeFifo};
pub use params::{FlowKey, KeyMode, LinkParams, LinkSpec};
pub use topology::build_full_mesh;
pub use wheel::{ReleaseQueue, TimingWheel};
