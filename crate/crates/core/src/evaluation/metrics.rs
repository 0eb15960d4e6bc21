use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::welldata::{FaciesCounts, FaciesTable, NUM_FACIES};

/// Counts indexed `[true - 1][predicted - 1]`: rows are the reference
/// (geologist) facies, columns the machine prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; NUM_FACIES]; NUM_FACIES],
}

fn check_labels(truth: &[u8], predicted: &[u8]) -> Result<()> {
    if truth.len() != predicted.len() {
        return Err(Error::Dimension(format!(
            "{} true labels vs {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if let Some(l) = truth
        .iter()
        .chain(predicted)
        .find(|&&l| l == 0 || l as usize > NUM_FACIES)
    {
        return Err(Error::Mismatch(format!(
            "facies label {l} outside 1..={NUM_FACIES}"
        )));
    }
    Ok(())
}

pub fn confusion(truth: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    check_labels(truth, predicted)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        cm.counts[t as usize - 1][p as usize - 1] += 1;
    }
    Ok(cm)
}

impl ConfusionMatrix {
    /// Count for 1-based labels.
    pub fn get(&self, truth: u8, predicted: u8) -> usize {
        self.counts[truth as usize - 1][predicted as usize - 1]
    }

    /// Number of samples whose reference facies is `f` (0-based).
    pub fn row_total(&self, f: usize) -> usize {
        self.counts[f].iter().sum()
    }

    pub fn col_total(&self, f: usize) -> usize {
        self.counts.iter().map(|r| r[f]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..NUM_FACIES).map(|f| self.counts[f][f]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    /// The largest off-diagonal cell as `(true, predicted, count)`, 1-based.
    pub fn dominant_confusion(&self) -> Option<(u8, u8, usize)> {
        let mut best: Option<(u8, u8, usize)> = None;
        for t in 0..NUM_FACIES {
            for p in 0..NUM_FACIES {
                let c = self.counts[t][p];
                if t != p && c > 0 && best.is_none_or(|b| c > b.2) {
                    best = Some((t as u8 + 1, p as u8 + 1, c));
                }
            }
        }
        best
    }
}

/// Precision, recall and F1 of one class. A 0/0 ratio is reported as 0 and
/// flagged as undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Summary {
    pub per_class: Vec<ClassScores>,
    /// Unweighted mean F1 over classes with support > 0.
    pub macro_f1: f64,
    /// Support-weighted mean F1.
    pub weighted_f1: f64,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> F1Summary {
    let per_class: Vec<ClassScores> = (0..NUM_FACIES)
        .map(|f| {
            let tp = cm.counts[f][f];
            let support = cm.row_total(f);
            let (precision, precision_undefined) = ratio(tp, cm.col_total(f));
            let (recall, recall_undefined) = ratio(tp, support);
            let (f1, f1_undefined) = if precision + recall > 0.0 {
                (2.0 * precision * recall / (precision + recall), false)
            } else {
                (0.0, precision_undefined || recall_undefined)
            };
            ClassScores {
                precision,
                recall,
                f1,
                support,
                precision_undefined,
                recall_undefined,
                f1_undefined,
            }
        })
        .collect();
    let supported: Vec<&ClassScores> = per_class.iter().filter(|c| c.support > 0).collect();
    let total: usize = supported.iter().map(|c| c.support).sum();
    let macro_f1 = if supported.is_empty() {
        0.0
    } else {
        supported.iter().map(|c| c.f1).sum::<f64>() / supported.len() as f64
    };
    let weighted_f1 = if total == 0 {
        0.0
    } else {
        supported
            .iter()
            .map(|c| c.f1 * c.support as f64)
            .sum::<f64>()
            / total as f64
    };
    F1Summary {
        per_class,
        macro_f1,
        weighted_f1,
    }
}

/// Fraction of samples predicted exactly or as a neighbour of the true facies.
pub fn adjacent_accuracy(truth: &[u8], predicted: &[u8], table: &FaciesTable) -> Result<f64> {
    check_labels(truth, predicted)?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let hits = truth
        .iter()
        .zip(predicted)
        .filter(|(&t, &p)| t == p || table.is_adjacent(t, p))
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Everything reported for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub scores: F1Summary,
    pub accuracy: f64,
    pub adjacent_accuracy: f64,
    pub samples: usize,
    /// Facies histogram of the evaluated (reference) labels.
    pub facies_counts: FaciesCounts,
    /// Facies histogram of the training data, when known.
    pub train_counts: Option<FaciesCounts>,
}

impl EvalReport {
    pub fn new(
        truth: &[u8],
        predicted: &[u8],
        table: &FaciesTable,
        train_counts: Option<FaciesCounts>,
    ) -> Result<Self> {
        let cm = confusion(truth, predicted)?;
        let mut facies_counts = [0; NUM_FACIES];
        for (f, c) in facies_counts.iter_mut().enumerate() {
            *c = cm.row_total(f);
        }
        Ok(EvalReport {
            scores: precision_recall_f1(&cm),
            accuracy: cm.accuracy(),
            adjacent_accuracy: adjacent_accuracy(truth, predicted, table)?,
            samples: truth.len(),
            confusion: cm,
            facies_counts,
            train_counts,
        })
    }

    pub fn macro_f1(&self) -> f64 {
        self.scores.macro_f1
    }

    pub fn weighted_f1(&self) -> f64 {
        self.scores.weighted_f1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_empty() {
        let labels = [1u8, 2, 3, 9, 9];
        let cm = confusion(&labels, &labels).unwrap();
        for t in 0..9 {
            for p in 0..9 {
                if t != p {
                    assert_eq!(cm.counts[t][p], 0);
                }
            }
        }
        let s = precision_recall_f1(&cm);
        assert_eq!(s.macro_f1, 1.0);
        assert!(s
            .per_class
            .iter()
            .filter(|c| c.support > 0)
            .all(|c| c.f1 == 1.0));
        assert_eq!(confusion(&[], &[]).unwrap(), ConfusionMatrix::default());
        assert!(confusion(&[1], &[]).is_err());
    }

    #[test]
    fn described_cell() {
        let truth = vec![1u8; 14];
        let pred = vec![2u8; 14];
        let cm = confusion(&truth, &pred).unwrap();
        assert_eq!(cm.get(1, 2), 14);
        assert_eq!(cm.dominant_confusion(), Some((1, 2, 14)));
    }

    #[test]
    fn two_thirds() {
        // class 1: TP=2, FP=1 (a 2 predicted as 1), FN=1 (a 1 predicted as 3)
        let truth = [1u8, 1, 1, 2];
        let pred = [1u8, 1, 3, 1];
        let s = precision_recall_f1(&confusion(&truth, &pred).unwrap());
        let c = s.per_class[0];
        for v in [c.precision, c.recall, c.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_support_excluded_and_flagged() {
        let truth = [1u8, 2];
        let pred = [1u8, 3];
        let s = precision_recall_f1(&confusion(&truth, &pred).unwrap());
        assert!(s.per_class[2].recall_undefined && s.per_class[2].support == 0);
        assert!(s.per_class[4].f1_undefined);
        // classes 1 (F1 = 1) and 2 (F1 = 0) have support
        assert_eq!(s.macro_f1, 0.5);
        assert_eq!(s.weighted_f1, 0.5);
    }

    #[test]
    fn adjacency() {
        let t = FaciesTable::default();
        assert_eq!(adjacent_accuracy(&[1, 5], &[1, 5], &t).unwrap(), 1.0);
        assert_eq!(adjacent_accuracy(&[1, 5, 9], &[2, 4, 8], &t).unwrap(), 1.0);
        let e = FaciesTable::empty();
        let truth = [1u8, 5, 9, 3];
        let pred = [2u8, 5, 8, 3];
        let acc = confusion(&truth, &pred).unwrap().accuracy();
        assert_eq!(adjacent_accuracy(&truth, &pred, &e).unwrap(), acc);
    }
}
