// SPDX-License-Identifier: Apache-2.0

//! Single-level timing wheel releasing packets at their departure time.
//!
//! Slot `i` holds packets whose departure tick (`departure_ts / granularity`)
//! is congruent to `i` and lies within one revolution of the cursor.
//! Packets further out wait in an ordered overflow set and are migrated
//! into slots as the cursor turns. A packet is only ever released by an
//! advance whose target time has reached its departure timestamp.

use std::collections::BTreeMap;

use crate::edt::Packet;

pub const DEFAULT_GRANULARITY_NS: u64 = 1_000;
pub const DEFAULT_SLOT_COUNT: usize = 65_536;

/// A time-ordered release stage for shaped packets.
pub trait ReleaseQueue {
    fn enqueue(&mut self, packet: Packet);

    /// Appends every packet with `departure_ts <= to` to `out`, ordered by
    /// departure time and then by enqueue order.
    fn advance_into(&mut self, to: u64, out: &mut Vec<Packet>);

    /// Earliest departure timestamp still queued.
    fn next_deadline(&self) -> Option<u64>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn advance(&mut self, to: u64) -> Vec<Packet> {
        let mut out = Vec::new();
        self.advance_into(to, &mut out);
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    seq: u64,
    packet: Packet,
}

impl Entry {
    fn order(&self) -> (u64, u64) {
        (self.packet.departure_ts, self.seq)
    }
}

#[derive(Debug, Clone)]
pub struct TimingWheel {
    granularity: u64,
    slot_count: usize,
    /// Absolute tick the cursor points at.
    cursor_tick: u64,
    now: u64,
    slots: Vec<Vec<Entry>>,
    in_slots: usize,
    overflow: BTreeMap<(u64, u64), Packet>,
    next_seq: u64,
    scratch: Vec<Entry>,
}

impl Default for TimingWheel {
    fn default() -> Self {
        Self::new(DEFAULT_GRANULARITY_NS, DEFAULT_SLOT_COUNT)
    }
}

impl TimingWheel {
    pub fn new(granularity_ns: u64, slot_count: usize) -> Self {
        assert!(granularity_ns > 0, "granularity must be positive");
        assert!(slot_count > 0, "wheel needs at least one slot");
        Self {
            granularity: granularity_ns,
            slot_count,
            cursor_tick: 0,
            now: 0,
            slots: vec![Vec::new(); slot_count],
            in_slots: 0,
            overflow: BTreeMap::new(),
            next_seq: 0,
            scratch: Vec::new(),
        }
    }

    pub fn granularity(&self) -> u64 {
        self.granularity
    }

    pub fn slot_count(&self) -> usize {
        self.slot_count
    }

    /// Span covered by the slots, in nanoseconds.
    pub fn horizon(&self) -> u64 {
        self.granularity * self.slot_count as u64
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Index of the current slot.
    pub fn cursor(&self) -> usize {
        (self.cursor_tick % self.slot_count as u64) as usize
    }

    pub fn overflow_len(&self) -> usize {
        self.overflow.len()
    }

    fn tick_of(&self, ts: u64) -> u64 {
        ts / self.granularity
    }

    fn slot_index(&self, tick: u64) -> usize {
        (tick % self.slot_count as u64) as usize
    }

    fn place(&mut self, seq: u64, packet: Packet) {
        let tick = self.tick_of(packet.departure_ts).max(self.cursor_tick);
        if tick - self.cursor_tick < self.slot_count as u64 {
            let idx = self.slot_index(tick);
            self.slots[idx].push(Entry { seq, packet });
            self.in_slots += 1;
        } else {
            self.overflow.insert((packet.departure_ts, seq), packet);
        }
    }

    /// Moves overflow entries that now fall within one revolution of the
    /// cursor into their slots.
    fn migrate(&mut self) {
        let limit = self.cursor_tick + self.slot_count as u64;
        while let Some((&(ts, _), _)) = self.overflow.first_key_value() {
            if self.tick_of(ts) >= limit {
                break;
            }
            let ((_, seq), packet) = self.overflow.pop_first().expect("peeked");
            let idx = self.slot_index(self.tick_of(ts));
            self.slots[idx].push(Entry { seq, packet });
            self.in_slots += 1;
        }
    }

    fn flush_scratch(&mut self, out: &mut Vec<Packet>) {
        self.scratch.sort_unstable_by_key(Entry::order);
        out.extend(self.scratch.drain(..).map(|e| e.packet));
    }
}

impl ReleaseQueue for TimingWheel {
    fn enqueue(&mut self, packet: Packet) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.place(seq, packet);
    }

    fn advance_into(&mut self, to: u64, out: &mut Vec<Packet>) {
        assert!(
            to >= self.now,
            "wheel cannot move backwards ({to} < {})",
            self.now
        );
        let to_tick = self.tick_of(to);
        loop {
            self.migrate();
            if self.in_slots == 0 {
                // Nothing in the slots: jump straight to the next overflow
                // entry, or to the target if that comes first.
                match self.overflow.first_key_value() {
                    Some((&(ts, _), _)) if self.tick_of(ts) <= to_tick => {
                        self.cursor_tick = self.tick_of(ts);
                        continue;
                    }
                    _ => {
                        self.cursor_tick = self.cursor_tick.max(to_tick);
                        self.migrate();
                        break;
                    }
                }
            }

            let idx = self.slot_index(self.cursor_tick);
            let at_target = self.cursor_tick == to_tick;
            if !self.slots[idx].is_empty() {
                let before = self.scratch.len();
                if at_target {
                    self.scratch
                        .extend(self.slots[idx].extract_if(.., |e| e.packet.departure_ts <= to));
                } else {
                    self.scratch.append(&mut self.slots[idx]);
                }
                self.in_slots -= self.scratch.len() - before;
                self.flush_scratch(out);
            }
            if at_target {
                break;
            }
            self.cursor_tick += 1;
        }
        self.now = to;
    }

    fn next_deadline(&self) -> Option<u64> {
        if self.in_slots > 0 {
            for offset in 0..self.slot_count as u64 {
                let slot = &self.slots[self.slot_index(self.cursor_tick + offset)];
                if let Some(min) = slot.iter().map(|e| e.packet.departure_ts).min() {
                    return Some(min);
                }
            }
            unreachable!("in_slots > 0 but every slot is empty");
        }
        self.overflow.first_key_value().map(|(&(ts, _), _)| ts)
    }

    fn len(&self) -> usize {
        self.in_slots + self.overflow.len()
    }
}
