// SPDX-License-Identifier: Apache-2.0

//! Cost model of the per-link filter/qdisc baseline.
//!
//! Every emulated link is a classifier filter matching one destination,
//! attached to a single device. Packets are matched against the filters in
//! order and stop at the first hit, so classification cost grows with the
//! position of the match. Attaching a filter costs more the more filters
//! already exist.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;

use crate::edt::Packet;
use crate::params::LinkParams;
use crate::topology::synthetic_address;
use crate::wheel::ReleaseQueue;

/// Calibrated per-operation costs, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostModel {
    /// Cost of checking one filter during classification.
    pub per_filter_check_ns: u64,
    /// Cost of attaching the first link.
    pub attach_base_ns: u64,
    /// Additional attach cost per link that is already configured.
    pub attach_per_existing_ns: u64,
    /// Cost of one hash-map lookup on the departure-timestamp path.
    pub per_map_lookup_ns: u64,
    /// Modeled cost of one map update, used when bulk loads are not timed
    /// against the wall clock. Defaults to 170 ms spread over 65,000 entries.
    pub per_map_update_ns: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            per_filter_check_ns: 100,
            attach_base_ns: 50_000,
            attach_per_existing_ns: 45,
            per_map_lookup_ns: 50,
            per_map_update_ns: 2_615,
        }
    }
}

impl CostModel {
    /// Time to attach one link when `existing` links are already present.
    pub fn attach_time(&self, existing: usize) -> u64 {
        self.attach_base_ns + self.attach_per_existing_ns * existing as u64
    }

    /// Closed form of the summed attach time for `links` sequential attaches.
    pub fn total_attach_time(&self, links: usize) -> u128 {
        let m = links as u128;
        self.attach_base_ns as u128 * m
            + self.attach_per_existing_ns as u128 * m * m.saturating_sub(1) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Filter {
    pub index: usize,
    pub match_dst: Ipv4Addr,
    pub params: LinkParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainMatch {
    /// Index and parameters of the first matching filter.
    pub matched: Option<(usize, LinkParams)>,
    pub cost_ns: u64,
}

impl ChainMatch {
    pub fn params(&self) -> Option<LinkParams> {
        self.matched.map(|(_, p)| p)
    }
}

/// Ordered filters attached to one emulated device.
#[derive(Debug, Clone, Default)]
pub struct FilterChain {
    filters: Vec<Filter>,
}

/// A chain together with the modeled time each attach took.
#[derive(Debug, Clone)]
pub struct BuiltChain {
    pub chain: FilterChain,
    pub per_link_times: Vec<u64>,
}

impl FilterChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    /// Appends a filter and returns its modeled attach time.
    pub fn attach(&mut self, match_dst: Ipv4Addr, params: LinkParams, model: &CostModel) -> u64 {
        let cost = model.attach_time(self.filters.len());
        self.filters.push(Filter {
            index: self.filters.len(),
            match_dst,
            params,
        });
        cost
    }

    /// Attaches `link_count` synthetic zero-delay links one after another.
    pub fn build(link_count: usize, model: &CostModel) -> BuiltChain {
        let mut chain = FilterChain {
            filters: Vec::with_capacity(link_count),
        };
        let per_link_times = (0..link_count)
            .map(|k| chain.attach(synthetic_address(k), LinkParams::with_latency(0), model))
            .collect();
        BuiltChain {
            chain,
            per_link_times,
        }
    }

    /// `count` filters for synthetic destinations; if `target` is given, the
    /// filter at that index matches `dst` instead.
    pub fn synthetic(count: usize, target: Option<(usize, Ipv4Addr, LinkParams)>) -> Self {
        let filters = (0..count)
            .map(|index| match target {
                Some((at, dst, params)) if at == index => Filter {
                    index,
                    match_dst: dst,
                    params,
                },
                _ => Filter {
                    index,
                    match_dst: synthetic_address(index),
                    params: LinkParams::with_latency(0),
                },
            })
            .collect();
        Self { filters }
    }

    /// First filter matching `dst`, scanning in index order.
    pub fn classify(&self, dst: Ipv4Addr, model: &CostModel) -> ChainMatch {
        match self.filters.iter().position(|f| f.match_dst == dst) {
            Some(at) => ChainMatch {
                matched: Some((at, self.filters[at].params)),
                cost_ns: (at as u64 + 1) * model.per_filter_check_ns,
            },
            None => ChainMatch {
                matched: None,
                cost_ns: self.filters.len() as u64 * model.per_filter_check_ns,
            },
        }
    }
}

/// Delay emulation of the baseline: the packet leaves `latency` after it
/// was created. Parameters without a latency add nothing.
pub fn netem_apply(params: &LinkParams, packet: &Packet) -> u64 {
    packet.created_at + params.latency().unwrap_or(0)
}

/// Time-ordered FIFO keyed on `(departure_ts, arrival order)`.
#[derive(Debug, Clone, Default)]
pub struct TimeFifo {
    queue: BTreeMap<(u64, u64), Packet>,
    next_seq: u64,
}

impl TimeFifo {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ReleaseQueue for TimeFifo {
    fn enqueue(&mut self, packet: Packet) {
        self.queue
            .insert((packet.departure_ts, self.next_seq), packet);
        self.next_seq += 1;
    }

    fn advance_into(&mut self, to: u64, out: &mut Vec<Packet>) {
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 > to {
                break;
            }
            out.push(entry.remove());
        }
    }

    fn next_deadline(&self) -> Option<u64> {
        self.queue.first_key_value().map(|(&(ts, _), _)| ts)
    }

    fn len(&self) -> usize {
        self.queue.len()
    }
}
