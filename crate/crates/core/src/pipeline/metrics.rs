use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::movement::{MovementClass, NUM_CLASSES};

/// Rows are ground truth, columns are predictions, both in canonical code
/// order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; NUM_CLASSES]; NUM_CLASSES],
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: MovementClass, prediction: MovementClass) {
        self.counts[truth.index()][prediction.index()] += 1;
    }

    pub fn get(&self, truth: MovementClass, prediction: MovementClass) -> u64 {
        self.counts[truth.index()][prediction.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.counts[i][i]).sum()
    }

    /// `None` when nothing has been recorded.
    pub fn accuracy(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            n => Some(self.correct() as f64 / n as f64),
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    /// Recall per ground-truth class; `None` for classes absent from truth.
    pub fn recall(&self, m: MovementClass) -> Option<f64> {
        let row = &self.counts[m.index()];
        let n: u64 = row.iter().sum();
        (n > 0).then(|| row[m.index()] as f64 / n as f64)
    }

    /// Comma-separated table with a `truth\pred` corner cell and a trailing
    /// accuracy line.
    pub fn to_table(&self) -> String {
        let mut out = String::from("truth\\pred");
        for m in MovementClass::ALL {
            let _ = write!(out, ",{}", m.code());
        }
        out.push('\n');
        for m in MovementClass::ALL {
            let _ = write!(out, "{}", m.code());
            for c in &self.counts[m.index()] {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        match self.accuracy() {
            Some(a) => {
                let _ = writeln!(out, "accuracy,{a}");
            }
            None => out.push_str("accuracy,\n"),
        }
        out
    }
}

pub fn evaluate(predictions: &[MovementClass], truth: &[MovementClass]) -> Result<ConfusionMatrix> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        cm.record(t, p);
    }
    Ok(cm)
}
