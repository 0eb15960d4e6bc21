//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use faciesnet::welldata::FaciesTable;

/// Brute-force per-class counting, independent of `ConfusionMatrix`.
pub struct OracleScores {
    pub cells: Vec<Vec<usize>>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub support: Vec<usize>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub adjacent: f64,
}

pub fn oracle(truth: &[u8], pred: &[u8], table: &FaciesTable) -> OracleScores {
    let n = truth.len();
    let mut cells = vec![vec![0usize; 9]; 9];
    for a in 1..=9u8 {
        for b in 1..=9u8 {
            cells[a as usize - 1][b as usize - 1] =
                (0..n).filter(|&i| truth[i] == a && pred[i] == b).count();
        }
    }
    let (mut precision, mut recall, mut f1, mut support) = (vec![], vec![], vec![], vec![]);
    for f in 1..=9u8 {
        let tp = (0..n).filter(|&i| truth[i] == f && pred[i] == f).count();
        let predicted = pred.iter().filter(|&&p| p == f).count();
        let actual = truth.iter().filter(|&&t| t == f).count();
        let p = if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let r = if actual == 0 {
            0.0
        } else {
            tp as f64 / actual as f64
        };
        precision.push(p);
        recall.push(r);
        f1.push(if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        });
        support.push(actual);
    }
    let present: Vec<usize> = (0..9).filter(|&f| support[f] > 0).collect();
    let macro_f1 = if present.is_empty() {
        0.0
    } else {
        present.iter().map(|&f| f1[f]).sum::<f64>() / present.len() as f64
    };
    let weighted_f1 = if n == 0 {
        0.0
    } else {
        present
            .iter()
            .map(|&f| f1[f] * support[f] as f64)
            .sum::<f64>()
            / n as f64
    };
    let hits = (0..n).filter(|&i| truth[i] == pred[i]).count();
    let adjacent_hits = (0..n)
        .filter(|&i| truth[i] == pred[i] || table.neighbours(truth[i]).contains(&pred[i]))
        .count();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    OracleScores {
        cells,
        precision,
        recall,
        f1,
        support,
        macro_f1,
        weighted_f1,
        accuracy: frac(hits),
        adjacent: frac(adjacent_hits),
    }
}

/// Path of the compiled `faciesnet` binary.
pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_faciesnet")
}
