use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::movement::{MovementClass, NUM_CLASSES};

/// Accumulated seconds per class within one episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DurationLedger {
    seconds: [f64; NUM_CLASSES],
    counted: [bool; NUM_CLASSES],
}

impl DurationLedger {
    /// `counted` selects the classes that make up [`total_active_s`](Self::total_active_s).
    pub fn new(counted: &BTreeSet<MovementClass>) -> Self {
        let mut mask = [false; NUM_CLASSES];
        for m in counted {
            mask[m.index()] = m.is_washing();
        }
        DurationLedger {
            seconds: [0.0; NUM_CLASSES],
            counted: mask,
        }
    }

    /// Adds `dt` seconds to `m`; negative or non-finite values are ignored.
    pub fn add(&mut self, m: MovementClass, dt: f64) {
        if dt > 0.0 && dt.is_finite() {
            self.seconds[m.index()] += dt;
        }
    }

    pub fn seconds(&self, m: MovementClass) -> f64 {
        self.seconds[m.index()]
    }

    pub fn set_seconds(&mut self, m: MovementClass, s: f64) {
        self.seconds[m.index()] = s;
    }

    pub fn is_counted(&self, m: MovementClass) -> bool {
        self.counted[m.index()]
    }

    /// Sum over counted washing movements, in code order.
    pub fn total_active_s(&self) -> f64 {
        MovementClass::ALL
            .into_iter()
            .filter(|m| self.is_counted(*m))
            .map(|m| self.seconds(m))
            .sum()
    }

    /// Sum over every class including idle.
    pub fn total_s(&self) -> f64 {
        self.seconds.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MovementClass, f64)> + '_ {
        MovementClass::ALL.into_iter().map(|m| (m, self.seconds(m)))
    }
}
