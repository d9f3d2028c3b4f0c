use std::collections::VecDeque;

use crate::movement::{MovementClass, NUM_CLASSES};

pub const DEFAULT_SMOOTHING_WINDOW: usize = 15;

/// Majority vote over a window of labels, most recent last. Ties go to the
/// most recent label among the tied classes, so the result is always a member
/// of the window. Returns `None` for an empty window.
pub fn smooth(window: &[MovementClass]) -> Option<MovementClass> {
    let mut counts = [0usize; NUM_CLASSES];
    for m in window {
        counts[m.index()] += 1;
    }
    let best = *counts.iter().max()?;
    window.iter().rev().find(|m| counts[m.index()] == best).copied()
}

/// Sliding-window majority filter over the last `capacity` argmax labels.
#[derive(Debug, Clone)]
pub struct MajoritySmoother {
    capacity: usize,
    window: VecDeque<MovementClass>,
}

impl MajoritySmoother {
    /// `capacity` is clamped to at least one.
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        MajoritySmoother {
            capacity,
            window: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, label: MovementClass) -> MovementClass {
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(label);
        smooth(self.window.make_contiguous()).expect("window is non-empty after push")
    }

    pub fn clear(&mut self) {
        self.window.clear();
    }
}

impl Default for MajoritySmoother {
    fn default() -> Self {
        MajoritySmoother::new(DEFAULT_SMOOTHING_WINDOW)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use MovementClass::*;

    #[test]
    fn single_element_window() {
        let mut s = MajoritySmoother::new(1);
        for m in [PalmToPalm, ThumbRub, Idle] {
            assert_eq!(s.push(m), m);
        }
    }

    #[test]
    fn majority_and_ties() {
        assert_eq!(smooth(&[PalmToPalm, PalmToPalm, PalmOverDorsum]), Some(PalmToPalm));
        assert_eq!(smooth(&[PalmToPalm, PalmOverDorsum]), Some(PalmOverDorsum));
        assert_eq!(smooth(&[PalmOverDorsum, PalmToPalm, PalmToPalm, PalmOverDorsum]), Some(PalmOverDorsum));
        assert_eq!(smooth(&[]), None);
    }

    #[test]
    fn window_slides() {
        let mut s = MajoritySmoother::new(3);
        assert_eq!(s.push(PalmToPalm), PalmToPalm);
        assert_eq!(s.push(ThumbRub), ThumbRub);
        assert_eq!(s.push(ThumbRub), ThumbRub);
        assert_eq!(s.push(PalmToPalm), ThumbRub);
        assert_eq!(s.push(PalmToPalm), PalmToPalm);
    }
}
