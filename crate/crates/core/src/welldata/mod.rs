//! Well-log ingestion: CSV parsing, standardization, depth windows and
//! train/blind splitting.

mod csv;
mod facies;
mod standardize;
mod window;

pub use self::csv::{parse_csv, parse_csv_bytes, write_csv, CsvOptions};
pub use facies::{facies_code, facies_index, FaciesTable, FACIES_CODES, FACIES_NAMES, NUM_FACIES};
pub use standardize::{prepare_wells, Standardizer};
pub use window::{extract_windows, prediction_windows, window_at, Example, WindowSet};

use crate::error::{Error, Result};

/// Input channels in feature order.
pub const CHANNELS: [&str; 7] = [
    "GR",
    "ILD_log10",
    "DeltaPHI",
    "PHIND",
    "PE",
    "NM_M",
    "RELPOS",
];
pub const NUM_CHANNELS: usize = CHANNELS.len();
/// Index of the photoelectric log, the channel that may be imputed.
pub const PE: usize = 4;

pub type FaciesCounts = [usize; NUM_FACIES];

/// One borehole: depth-indexed log channels plus optional facies labels.
/// Gaps (missing cells) are stored as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Well {
    pub name: String,
    pub formation: Vec<String>,
    pub depth: Vec<f64>,
    /// `channels[i]` holds [`CHANNELS`]`[i]`.
    pub channels: Vec<Vec<f64>>,
    pub labels: Option<Vec<u8>>,
}

impl Well {
    pub fn new(
        name: impl Into<String>,
        depth: Vec<f64>,
        channels: Vec<Vec<f64>>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let formation = vec![String::new(); depth.len()];
        let well = Well {
            name: name.into(),
            formation,
            depth,
            channels,
            labels,
        };
        well.validate()?;
        Ok(well)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.depth.len();
        let bad = |msg: String| Err(Error::Format(format!("well `{}`: {msg}", self.name)));
        if self.channels.len() != NUM_CHANNELS {
            return bad(format!(
                "expected {NUM_CHANNELS} channels, got {}",
                self.channels.len()
            ));
        }
        if self.formation.len() != n || self.channels.iter().any(|c| c.len() != n) {
            return bad("channel lengths differ from depth length".into());
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return bad("label count differs from depth length".into());
            }
            if let Some(l) = labels.iter().find(|&&l| l == 0 || l as usize > NUM_FACIES) {
                return bad(format!("facies label {l} outside 1..={NUM_FACIES}"));
            }
        }
        if self.depth.iter().any(|d| !d.is_finite()) {
            return bad("non-finite depth".into());
        }
        if let Some(w) = self.depth.windows(2).find(|w| w[1] <= w[0]) {
            return bad(format!(
                "depth not strictly increasing at {} -> {}",
                w[0], w[1]
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.depth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depth.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.is_some()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        CHANNELS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.channels[i].as_slice())
    }

    pub fn gap_count(&self, channel: usize) -> usize {
        self.channels[channel].iter().filter(|v| v.is_nan()).count()
    }
}

/// Partitions wells by identity into `(train, blind)`.
pub fn split_by_well(wells: Vec<Well>, blind_names: &[String]) -> Result<(Vec<Well>, Vec<Well>)> {
    for (i, name) in blind_names.iter().enumerate() {
        if blind_names[..i].contains(name) {
            return Err(Error::Config(format!("blind well `{name}` listed twice")));
        }
        if !wells.iter().any(|w| &w.name == name) {
            return Err(Error::Config(format!(
                "blind well `{name}` not found in data"
            )));
        }
    }
    Ok(wells
        .into_iter()
        .partition(|w| !blind_names.contains(&w.name)))
}

/// Histogram of facies labels, indexed by `label - 1`. Unlabeled wells count nothing.
pub fn facies_counts(wells: &[Well]) -> FaciesCounts {
    let mut counts = [0; NUM_FACIES];
    for labels in wells.iter().filter_map(|w| w.labels.as_ref()) {
        for &l in labels {
            counts[l as usize - 1] += 1;
        }
    }
    counts
}

#[cfg(test)]
pub(crate) fn toy_well(name: &str, labels: &[u8]) -> Well {
    let n = labels.len();
    let depth = (0..n).map(|i| 100.0 + 0.5 * i as f64).collect();
    let channels = (0..NUM_CHANNELS)
        .map(|c| (0..n).map(|i| (c * 10 + i) as f64).collect())
        .collect();
    Well::new(name, depth, channels, Some(labels.to_vec())).unwrap()
}
