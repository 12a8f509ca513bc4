// SPDX-License-Identifier: Apache-2.0

//! Fixed-capacity hash maps mirroring the kernel-side layout: the emulation
//! map (key -> link parameters) and the last-departure timestamp map.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, RwLock};
use std::time::Instant;

use crate::error::ParamsError;
use crate::params::{FlowKey, KeyMode, LinkParams, LinkSpec};

pub const DEFAULT_CAPACITY: usize = 131_072;

/// Specs per timed chunk during a bulk load.
const LOAD_CHUNK: usize = 1024;

#[derive(Debug, Clone)]
pub struct EmulationMap {
    mode: KeyMode,
    capacity: usize,
    entries: HashMap<FlowKey, LinkParams>,
}

impl Default for EmulationMap {
    fn default() -> Self {
        Self::new(KeyMode::Destination)
    }
}

impl EmulationMap {
    pub fn new(mode: KeyMode) -> Self {
        Self::with_capacity(mode, DEFAULT_CAPACITY)
    }

    /// `capacity` bounds the number of distinct keys. Storage grows on
    /// demand; [`EmulationMap::bulk_load`] reserves room for its whole batch
    /// before inserting so a load never rehashes midway.
    pub fn with_capacity(mode: KeyMode, capacity: usize) -> Self {
        Self {
            mode,
            capacity,
            entries: HashMap::new(),
        }
    }

    pub fn mode(&self) -> KeyMode {
        self.mode
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Upserts `params` under `key`.
    pub fn insert(&mut self, key: FlowKey, params: LinkParams) -> Result<(), ParamsError> {
        self.try_insert(key, params).map(|_| ())
    }

    fn try_insert(
        &mut self,
        key: FlowKey,
        params: LinkParams,
    ) -> Result<Option<LinkParams>, ParamsError> {
        if key.mode() != self.mode {
            return Err(ParamsError::KeyModeMismatch {
                expected: self.mode,
            });
        }
        if let Some(slot) = self.entries.get_mut(&key) {
            return Ok(Some(std::mem::replace(slot, params)));
        }
        if self.entries.len() >= self.capacity {
            return Err(ParamsError::CapacityExceeded {
                capacity: self.capacity,
            });
        }
        self.entries.insert(key, params);
        Ok(None)
    }

    #[inline]
    pub fn lookup(&self, key: &FlowKey) -> Option<LinkParams> {
        self.entries.get(key).copied()
    }

    pub fn remove(&mut self, key: &FlowKey) -> Option<LinkParams> {
        self.entries.remove(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FlowKey, &LinkParams)> {
        self.entries.iter()
    }

    /// Loads every spec, keyed according to the map's mode. Either all specs
    /// are applied or, on error, the map is restored to its prior contents.
    pub fn bulk_load(&mut self, specs: &[LinkSpec]) -> Result<LoadReport, ParamsError> {
        let mut touched: HashSet<FlowKey> = HashSet::with_capacity(specs.len());
        let mut undo: Vec<(FlowKey, Option<LinkParams>)> = Vec::with_capacity(specs.len());
        let mut chunks = Vec::with_capacity(specs.len().div_ceil(LOAD_CHUNK));

        let start = Instant::now();
        let room = self.capacity.saturating_sub(self.entries.len());
        self.entries.reserve(specs.len().min(room));
        for chunk in specs.chunks(LOAD_CHUNK) {
            let chunk_start = Instant::now();
            for spec in chunk {
                let key = spec.key(self.mode);
                match self.try_insert(key, spec.params()) {
                    Ok(previous) => {
                        if touched.insert(key) {
                            undo.push((key, previous));
                        }
                    }
                    Err(e) => {
                        self.rollback(undo);
                        return Err(e);
                    }
                }
            }
            chunks.push(ChunkTiming {
                entries: chunk.len(),
                elapsed_ns: chunk_start.elapsed().as_nanos() as u64,
            });
        }
        let elapsed_ns = start.elapsed().as_nanos() as u64;

        Ok(LoadReport {
            entry_count: touched.len(),
            elapsed_ns,
            chunks,
        })
    }

    fn rollback(&mut self, undo: Vec<(FlowKey, Option<LinkParams>)>) {
        for (key, previous) in undo.into_iter().rev() {
            match previous {
                Some(p) => {
                    self.entries.insert(key, p);
                }
                None => {
                    self.entries.remove(&key);
                }
            }
        }
    }
}

/// Wall-clock timing of one chunk of a bulk load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkTiming {
    pub entries: usize,
    pub elapsed_ns: u64,
}

impl ChunkTiming {
    pub fn per_entry_ns(&self) -> f64 {
        self.elapsed_ns as f64 / self.entries.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadReport {
    /// Distinct keys written by this load.
    pub entry_count: usize,
    pub elapsed_ns: u64,
    pub chunks: Vec<ChunkTiming>,
}

/// Last departure timestamp per key, used by the rate limiter.
#[derive(Debug, Clone, Default)]
pub struct TimestampMap {
    entries: HashMap<FlowKey, u64>,
}

impl TimestampMap {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn get(&self, key: &FlowKey) -> Option<u64> {
        self.entries.get(key).copied()
    }

    /// Records `ts` for `key`. Stored values never move backwards; the
    /// returned value is what is stored after the update.
    #[inline]
    pub fn update(&mut self, key: FlowKey, ts: u64) -> u64 {
        let slot = self.entries.entry(key).or_insert(ts);
        debug_assert!(ts >= *slot, "timestamp for {key} moved backwards");
        *slot = (*slot).max(ts);
        *slot
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// An emulation map shared between one writer (the agent) and any number
/// of readers (datapaths). Readers always see a complete `LinkParams`.
#[derive(Debug, Clone, Default)]
pub struct SharedEmulationMap {
    inner: Arc<RwLock<EmulationMap>>,
}

impl SharedEmulationMap {
    pub fn new(map: EmulationMap) -> Self {
        Self {
            inner: Arc::new(RwLock::new(map)),
        }
    }

    pub fn lookup(&self, key: &FlowKey) -> Option<LinkParams> {
        self.inner
            .read()
            .expect("emulation map poisoned")
            .lookup(key)
    }

    pub fn insert(&self, key: FlowKey, params: LinkParams) -> Result<(), ParamsError> {
        self.inner
            .write()
            .expect("emulation map poisoned")
            .insert(key, params)
    }

    pub fn remove(&self, key: &FlowKey) -> Option<LinkParams> {
        self.inner
            .write()
            .expect("emulation map poisoned")
            .remove(key)
    }

    pub fn bulk_load(&self, specs: &[LinkSpec]) -> Result<LoadReport, ParamsError> {
        self.inner
            .write()
            .expect("emulation map poisoned")
            .bulk_load(specs)
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("emulation map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copy of the current contents.
    pub fn snapshot(&self) -> EmulationMap {
        self.inner.read().expect("emulation map poisoned").clone()
    }
}
