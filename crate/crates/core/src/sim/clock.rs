// SPDX-License-Identifier: Apache-2.0

/// Simulation time in nanoseconds. Only moves forward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now: u64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn advance_to(&mut self, t: u64) {
        assert!(
            t >= self.now,
            "virtual clock moved backwards: {t} < {}",
            self.now
        );
        self.now = t;
    }

    pub fn advance_by(&mut self, dt: u64) {
        self.now += dt;
    }
}
