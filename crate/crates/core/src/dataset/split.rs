use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.7,
            validation: 0.2,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, validation, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::Validation(format!("split ratios must be positive, got {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("split ratios must sum to 1, got {sum}")));
        }
        Ok(())
    }

    /// `(train, validation, test)` sizes for `n` items: floor, floor, remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let train = floor_share(self.train, n);
        let validation = floor_share(self.validation, n).min(n - train);
        (train, validation, n - train - validation)
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;

    /// Parses `"0.7,0.2,0.1"` or `"0.7/0.2/0.1"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split(|c| c == ',' || c == '/')
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Validation(format!("invalid ratio '{p}'"))))
            .collect::<Result<Vec<_>>>()?;
        match parts[..] {
            [a, b, c] => SplitRatios::new(a, b, c),
            _ => Err(Error::Validation(format!("expected three ratios, got '{s}'"))),
        }
    }
}

/// `floor(ratio * n)`, snapping products that are integers up to rounding
/// error (0.2 * 309315 evaluates to 61862.99999999999 in binary floating point).
fn floor_share(ratio: f64, n: usize) -> usize {
    let x = ratio * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.max(1.0) {
        nearest as usize
    } else {
        x.floor() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitAssignment {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Frame-level split: a seeded shuffle of `0..n_items` cut by the floor rule.
/// Each index set is returned sorted.
pub fn split_dataset(n_items: usize, ratios: SplitRatios, seed: u64) -> Result<SplitAssignment> {
    ratios.validate()?;
    let (n_train, n_val, _) = ratios.sizes(n_items);
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut test = order.split_off(n_train + n_val);
    let mut validation = order.split_off(n_train);
    let mut train = order;
    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    Ok(SplitAssignment {
        seed,
        train,
        validation,
        test,
    })
}

/// Episode-level split: whole groups (episodes) are shuffled and assigned so
/// that no group straddles two splits. `group_sizes[g]` is the number of items
/// in group `g`; items are numbered consecutively group by group. Groups are
/// dealt to train until its floor target is reached, then to validation, and
/// the rest to test, so sizes only approximate the ratios.
pub fn split_by_group(group_sizes: &[usize], ratios: SplitRatios, seed: u64) -> Result<SplitAssignment> {
    ratios.validate()?;
    let total: usize = group_sizes.iter().sum();
    let (target_train, target_val, _) = ratios.sizes(total);

    let mut offsets = Vec::with_capacity(group_sizes.len());
    let mut acc = 0;
    for &s in group_sizes {
        offsets.push(acc);
        acc += s;
    }

    let mut order: Vec<usize> = (0..group_sizes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut out = SplitAssignment {
        seed,
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for g in order {
        let items = offsets[g]..offsets[g] + group_sizes[g];
        let bucket = if out.train.len() < target_train {
            &mut out.train
        } else if out.validation.len() < target_val {
            &mut out.validation
        } else {
            &mut out.test
        };
        bucket.extend(items);
    }
    out.train.sort_unstable();
    out.validation.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_from_the_deep_learning_experiments() {
        let s = split_dataset(309_315, SplitRatios::default(), 7).unwrap();
        assert_eq!(s.sizes(), (216_520, 61_863, 30_932));
        assert_eq!(s.len(), 309_315);
    }

    #[test]
    fn empty_split() {
        let s = split_dataset(0, SplitRatios::default(), 1).unwrap();
        assert!(s.train.is_empty() && s.validation.is_empty() && s.test.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = split_dataset(10, SplitRatios::default(), 42).unwrap();
        let b = split_dataset(10, SplitRatios::default(), 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sizes(), (7, 2, 1));
    }

    #[test]
    fn bad_ratios() {
        assert!(SplitRatios::new(0.7, 0.2, 0.2).is_err());
        assert!(SplitRatios::new(1.0, 0.0, 0.0).is_err());
        assert!(SplitRatios::new(-0.1, 0.6, 0.5).is_err());
        assert!("0.7,0.2".parse::<SplitRatios>().is_err());
        assert_eq!("0.7/0.2/0.1".parse::<SplitRatios>().unwrap(), SplitRatios::default());
    }

    #[test]
    fn group_split_keeps_groups_whole() {
        let sizes = [5, 3, 8, 2, 6, 4, 7, 1, 9, 5];
        let s = split_by_group(&sizes, SplitRatios::default(), 3).unwrap();
        assert_eq!(s.len(), sizes.iter().sum::<usize>());
        let mut offset = 0;
        for &n in &sizes {
            let items: Vec<usize> = (offset..offset + n).collect();
            let in_train = items.iter().filter(|i| s.train.binary_search(i).is_ok()).count();
            let in_val = items.iter().filter(|i| s.validation.binary_search(i).is_ok()).count();
            let in_test = items.iter().filter(|i| s.test.binary_search(i).is_ok()).count();
            assert!([in_train, in_val, in_test].iter().filter(|&&c| c > 0).count() == 1);
            assert_eq!(in_train + in_val + in_test, n);
            offset += n;
        }
    }
}
