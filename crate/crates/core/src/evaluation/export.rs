//! Plot-ready CSV and JSON outputs.

use std::fs;
use std::path::{Path, PathBuf};

use super::metrics::{ConfusionMatrix, EvalReport};
use super::predict::DepthPrediction;
use crate::error::{Error, Result};
use crate::welldata::{FaciesCounts, FACIES_CODES, FACIES_NAMES, NUM_FACIES};

pub const FACIES_COLUMN_FILE: &str = "facies_column.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const COUNTS_FILE: &str = "facies_counts.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `well,depth,predicted,true,confidence,band` per depth sample.
pub fn facies_column_csv(predictions: &[DepthPrediction]) -> String {
    let mut s = String::from("well,depth,predicted,true,confidence,band\n");
    for p in predictions {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.well,
            p.depth,
            p.facies,
            p.true_facies.map_or(String::new(), |t| t.to_string()),
            p.confidence,
            p.band.as_str()
        ));
    }
    s
}

/// `well,depth,facies,code,p_SS..p_BS,confidence,band` per depth sample.
pub fn predictions_csv(predictions: &[DepthPrediction]) -> String {
    let mut s = String::from("well,depth,facies,code");
    for code in FACIES_CODES {
        s.push_str(&format!(",p_{code}"));
    }
    s.push_str(",confidence,band\n");
    for p in predictions {
        s.push_str(&format!(
            "{},{},{},{}",
            p.well,
            p.depth,
            p.facies,
            FACIES_CODES[p.facies as usize - 1]
        ));
        for q in &p.probabilities {
            s.push_str(&format!(",{q}"));
        }
        s.push_str(&format!(",{},{}\n", p.confidence, p.band.as_str()));
    }
    s
}

/// 9×9 counts in facies-table order (rows true, columns predicted) followed
/// by total, precision, recall and F1 columns.
pub fn confusion_csv(report: &EvalReport) -> String {
    let mut s = String::from("true\\predicted");
    for code in FACIES_CODES {
        s.push(',');
        s.push_str(code);
    }
    s.push_str(",total,precision,recall,f1\n");
    for (f, code) in FACIES_CODES.iter().enumerate() {
        s.push_str(code);
        for c in report.confusion.counts[f] {
            s.push_str(&format!(",{c}"));
        }
        let sc = &report.scores.per_class[f];
        s.push_str(&format!(
            ",{},{},{},{}\n",
            report.confusion.row_total(f),
            sc.precision,
            sc.recall,
            sc.f1
        ));
    }
    s
}

/// Per-class `(precision, recall, f1)` as read back from a confusion CSV.
pub type ClassTriple = (f64, f64, f64);

/// Parses the output of [`confusion_csv`].
pub fn parse_confusion_csv(text: &str) -> Result<(ConfusionMatrix, Vec<ClassTriple>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty confusion file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() != NUM_FACIES + 5 || cols[1..=NUM_FACIES] != FACIES_CODES {
        return Err(Error::Format(
            "confusion header does not list the nine facies".into(),
        ));
    }
    let mut cm = ConfusionMatrix::default();
    let mut triples = Vec::with_capacity(NUM_FACIES);
    for (f, code) in FACIES_CODES.iter().enumerate() {
        let row = f + 2;
        let line = lines
            .next()
            .ok_or_else(|| Error::Format("confusion file has fewer than 9 rows".into()))?;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != NUM_FACIES + 5 || cells[0] != *code {
            return Err(Error::Parse {
                row,
                msg: format!("expected a `{code}` row with {} cells", NUM_FACIES + 5),
            });
        }
        let bad = |c: &str| Error::Parse {
            row,
            msg: format!("`{c}` is not a number"),
        };
        for p in 0..NUM_FACIES {
            cm.counts[f][p] = cells[p + 1].parse().map_err(|_| bad(cells[p + 1]))?;
        }
        let num = |c: &str| c.parse::<f64>().map_err(|_| bad(c));
        triples.push((num(cells[11])?, num(cells[12])?, num(cells[13])?));
    }
    Ok((cm, triples))
}

/// `facies,code,name,train,evaluated` counts per facies.
pub fn facies_counts_csv(train: Option<&FaciesCounts>, evaluated: &FaciesCounts) -> String {
    let mut s = String::from("facies,code,name,train,evaluated\n");
    for f in 0..NUM_FACIES {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            f + 1,
            FACIES_CODES[f],
            FACIES_NAMES[f],
            train.map_or(String::new(), |t| t[f].to_string()),
            evaluated[f]
        ));
    }
    s
}

/// Writes the facies column, confusion, counts and JSON metrics files into
/// `dir` and returns their paths.
pub fn export_plot_data(
    report: &EvalReport,
    predictions: &[DepthPrediction],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = [
        (FACIES_COLUMN_FILE, facies_column_csv(predictions)),
        (CONFUSION_FILE, confusion_csv(report)),
        (
            COUNTS_FILE,
            facies_counts_csv(report.train_counts.as_ref(), &report.facies_counts),
        ),
        (
            METRICS_FILE,
            serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?,
        ),
    ];
    let mut paths = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write(&p, text)?;
        paths.push(p);
    }
    Ok(paths)
}
