// SPDX-License-Identifier: Apache-2.0

//! Departure-timestamp rewriting for egress packets.
//!
//! Each packet's destination is looked up in the emulation map. Unmatched
//! packets pass through untouched. Matched packets are first rate limited
//! (the departure is spaced one inter-packet gap after the previous packet
//! to the same key) and then delayed by the configured latency.
//!
//! Units: packet lengths are bytes, rates bytes per second, all times
//! nanoseconds since the simulation epoch.

use std::net::Ipv4Addr;
use std::num::NonZeroU64;

use crate::map::{EmulationMap, TimestampMap};
use crate::params::{FlowKey, NANOS_PER_SEC};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub src: Ipv4Addr,
    pub dst: Ipv4Addr,
    /// Bytes, always > 0.
    pub length: u32,
    pub created_at: u64,
    pub departure_ts: u64,
}

impl Packet {
    /// A fresh packet departs at its creation time until something says
    /// otherwise.
    pub fn new(id: u64, src: Ipv4Addr, dst: Ipv4Addr, length: u32, created_at: u64) -> Self {
        assert!(length > 0, "packet length must be positive");
        Self {
            id,
            src,
            dst,
            length,
            created_at,
            departure_ts: created_at,
        }
    }
}

/// How the rate limiter treats a stale last-departure timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThrottleMode {
    /// `t_next = max(now, t_last + gap)`. An idle flow restarts at `now`
    /// instead of bursting to catch up.
    #[default]
    Clamped,
    /// `t_next = t_last + gap`, even when that lies in the past.
    Literal,
}

/// Whether a packet hit an emulation entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// No entry; the packet goes straight to the device.
    PassThrough,
    /// Departure timestamp was rewritten.
    Shaped,
}

/// `floor(length * 1e9 / rate)` nanoseconds.
#[inline]
pub fn inter_packet_gap(length: u32, rate: NonZeroU64) -> u64 {
    (length as u128 * NANOS_PER_SEC as u128 / rate.get() as u128) as u64
}

/// Spaces `packet` behind the previous packet sent under `key` and records
/// the new departure in `tstamps`. Returns the new departure timestamp.
pub fn throttle(
    packet: &mut Packet,
    key: FlowKey,
    rate: NonZeroU64,
    tstamps: &mut TimestampMap,
    now: u64,
    mode: ThrottleMode,
) -> u64 {
    let gap = inter_packet_gap(packet.length, rate);
    let t_next = match tstamps.get(&key) {
        Some(t_last) => match mode {
            ThrottleMode::Clamped => now.max(t_last + gap),
            ThrottleMode::Literal => t_last + gap,
        },
        None => now,
    };
    tstamps.update(key, t_next);
    packet.departure_ts = t_next;
    t_next
}

/// Pushes the departure timestamp back by `latency` nanoseconds.
#[inline]
pub fn inject_delay(packet: &mut Packet, latency: u64) -> u64 {
    packet.departure_ts += latency;
    packet.departure_ts
}

/// Rewrites the departure timestamp of an egress packet according to the
/// emulation entry for its destination: throttle first, then delay.
pub fn set_departure(
    packet: &mut Packet,
    emu: &EmulationMap,
    tstamps: &mut TimestampMap,
    now: u64,
    mode: ThrottleMode,
) -> Verdict {
    debug_assert!(packet.created_at <= now);
    let key = emu.mode().key_for(packet.src, packet.dst);
    let Some(params) = emu.lookup(&key) else {
        return Verdict::PassThrough;
    };
    if let Some(rate) = params.rate() {
        throttle(packet, key, rate, tstamps, now, mode);
    }
    if let Some(latency) = params.latency() {
        inject_delay(packet, latency);
    }
    Verdict::Shaped
}
