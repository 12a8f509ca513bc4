// SPDX-License-Identifier: Apache-2.0

//! The two emulation mechanisms behind a common interface so that the
//! experiment loops can drive either one.

use std::net::Ipv4Addr;

use crate::edt::{inject_delay, set_departure, throttle, Packet, ThrottleMode, Verdict};
use crate::map::{EmulationMap, TimestampMap};
use crate::netem::{netem_apply, CostModel, FilterChain, TimeFifo};
use crate::params::{FlowKey, KeyMode};
use crate::topology::synthetic_address;
use crate::wheel::{ReleaseQueue, TimingWheel};

use super::config::{DatapathKind, ExperimentConfig};

/// Address the probes and flows are sent from.
pub const PROBE_SRC: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 2);
/// Address the probes and flows are sent to.
pub const PROBE_DST: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 1);

/// Result of handing one packet to a datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ingest {
    /// Classification time spent before the packet leaves the hook.
    pub cost_ns: u64,
    /// Set for pass-through packets, which skip the release queue.
    pub forwarded: Option<Packet>,
}

pub trait Datapath {
    /// Processes a packet arriving at `now`. Shaped packets are queued until
    /// their departure time.
    fn ingest(&mut self, packet: Packet, now: u64) -> Ingest;

    fn release_into(&mut self, to: u64, out: &mut Vec<Packet>);

    fn next_release(&self) -> Option<u64>;

    fn queued(&self) -> usize;

    fn kind(&self) -> DatapathKind;
}

pub struct EdtDatapath {
    map: EmulationMap,
    tstamps: TimestampMap,
    wheel: TimingWheel,
    mode: ThrottleMode,
    lookup_cost_ns: u64,
}

impl EdtDatapath {
    pub fn new(map: EmulationMap, mode: ThrottleMode, model: &CostModel) -> Self {
        Self {
            map,
            tstamps: TimestampMap::new(),
            wheel: TimingWheel::default(),
            mode,
            lookup_cost_ns: model.per_map_lookup_ns,
        }
    }

    pub fn map(&self) -> &EmulationMap {
        &self.map
    }
}

impl Datapath for EdtDatapath {
    fn ingest(&mut self, mut packet: Packet, now: u64) -> Ingest {
        let done = now + self.lookup_cost_ns;
        match set_departure(&mut packet, &self.map, &mut self.tstamps, done, self.mode) {
            Verdict::PassThrough => Ingest {
                cost_ns: self.lookup_cost_ns,
                forwarded: Some(packet),
            },
            Verdict::Shaped => {
                self.wheel.enqueue(packet);
                Ingest {
                    cost_ns: self.lookup_cost_ns,
                    forwarded: None,
                }
            }
        }
    }

    fn release_into(&mut self, to: u64, out: &mut Vec<Packet>) {
        self.wheel.advance_into(to, out);
    }

    fn next_release(&self) -> Option<u64> {
        self.wheel.next_deadline()
    }

    fn queued(&self) -> usize {
        self.wheel.len()
    }

    fn kind(&self) -> DatapathKind {
        DatapathKind::EdtMap
    }
}

pub struct NetemDatapath {
    chain: FilterChain,
    model: CostModel,
    tstamps: TimestampMap,
    fifo: TimeFifo,
    mode: ThrottleMode,
}

impl NetemDatapath {
    pub fn new(chain: FilterChain, mode: ThrottleMode, model: &CostModel) -> Self {
        Self {
            chain,
            model: *model,
            tstamps: TimestampMap::new(),
            fifo: TimeFifo::new(),
            mode,
        }
    }

    pub fn chain(&self) -> &FilterChain {
        &self.chain
    }
}

impl Datapath for NetemDatapath {
    fn ingest(&mut self, mut packet: Packet, now: u64) -> Ingest {
        let hit = self.chain.classify(packet.dst, &self.model);
        let done = now + hit.cost_ns;
        let Some((index, params)) = hit.matched else {
            return Ingest {
                cost_ns: hit.cost_ns,
                forwarded: Some(packet),
            };
        };
        match params.rate() {
            Some(rate) => {
                let key = FlowKey::dst(self.chain.filters()[index].match_dst);
                throttle(&mut packet, key, rate, &mut self.tstamps, done, self.mode);
                if let Some(latency) = params.latency() {
                    inject_delay(&mut packet, latency);
                }
            }
            None => packet.departure_ts = netem_apply(&params, &packet),
        }
        self.fifo.enqueue(packet);
        Ingest {
            cost_ns: hit.cost_ns,
            forwarded: None,
        }
    }

    fn release_into(&mut self, to: u64, out: &mut Vec<Packet>) {
        self.fifo.advance_into(to, out);
    }

    fn next_release(&self) -> Option<u64> {
        self.fifo.next_deadline()
    }

    fn queued(&self) -> usize {
        self.fifo.len()
    }

    fn kind(&self) -> DatapathKind {
        DatapathKind::FilterChain
    }
}

/// Emulation map with `entry_count` entries; the one at `match_index`
/// (if any) targets [`PROBE_DST`].
pub fn build_emulation_map(cfg: &ExperimentConfig) -> EmulationMap {
    let mut map = EmulationMap::with_capacity(
        KeyMode::Destination,
        cfg.entry_count.max(crate::map::DEFAULT_CAPACITY),
    );
    for index in 0..cfg.entry_count {
        let (dst, params) = if Some(index) == cfg.match_index {
            (PROBE_DST, cfg.matched_params())
        } else {
            (
                synthetic_address(index),
                crate::params::LinkParams::with_latency(0),
            )
        };
        map.insert(FlowKey::dst(dst), params)
            .expect("capacity sized to entry count");
    }
    map
}

pub fn build_datapath(cfg: &ExperimentConfig, kind: DatapathKind) -> Box<dyn Datapath> {
    match kind {
        DatapathKind::EdtMap => Box::new(EdtDatapath::new(
            build_emulation_map(cfg),
            cfg.throttle_mode,
            &cfg.cost_model,
        )),
        DatapathKind::FilterChain => {
            let target = cfg
                .match_index
                .map(|index| (index, PROBE_DST, cfg.matched_params()));
            Box::new(NetemDatapath::new(
                FilterChain::synthetic(cfg.entry_count, target),
                cfg.throttle_mode,
                &cfg.cost_model,
            ))
        }
    }
}
