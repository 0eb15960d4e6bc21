use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::network::{infer, Checkpoint, ModelParams, ModelSpec};
use crate::tensor::{softmax, Tensor};
use crate::welldata::{prediction_windows, prepare_wells, Standardizer, Well};

/// Confidence at or above this is "high".
pub const HIGH_CONFIDENCE: f64 = 0.7;
/// Confidence below this is "low".
pub const LOW_CONFIDENCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceBand {
    High,
    Medium,
    Low,
}

impl ConfidenceBand {
    pub fn of(confidence: f64) -> Self {
        if confidence >= HIGH_CONFIDENCE {
            ConfidenceBand::High
        } else if confidence >= LOW_CONFIDENCE {
            ConfidenceBand::Medium
        } else {
            ConfidenceBand::Low
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConfidenceBand::High => "high",
            ConfidenceBand::Medium => "medium",
            ConfidenceBand::Low => "low",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthPrediction {
    pub well: String,
    pub depth: f64,
    /// Predicted facies, 1-based.
    pub facies: u8,
    pub probabilities: Vec<f64>,
    /// Maximum class probability.
    pub confidence: f64,
    pub band: ConfidenceBand,
    pub true_facies: Option<u8>,
}

/// Facies, class probabilities and confidence for every depth sample of
/// `well`, each from the window centered on that sample.
pub fn predict_with_confidence(
    spec: &ModelSpec,
    params: &ModelParams<f32>,
    standardizer: &Standardizer,
    well: &Well,
    impute_pe: bool,
) -> Result<Vec<DepthPrediction>> {
    let prepared = prepare_wells(std::slice::from_ref(well), standardizer, impute_pe)?.remove(0);
    let windows = prediction_windows::<f32>(&prepared, spec.window)?;
    let logits = infer(spec, params, &windows)?;
    logits
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let p = softmax(&l.cast::<f64>())?;
            let facies = p.argmax() as u8 + 1;
            let confidence = p.data()[facies as usize - 1];
            Ok(DepthPrediction {
                well: well.name.clone(),
                depth: well.depth[i],
                facies,
                probabilities: p.into_data(),
                confidence,
                band: ConfidenceBand::of(confidence),
                true_facies: well.labels.as_ref().map(|l| l[i]),
            })
        })
        .collect()
}

impl Checkpoint {
    pub fn predict(&self, well: &Well, impute_pe: bool) -> Result<Vec<DepthPrediction>> {
        predict_with_confidence(
            &self.spec,
            &self.params,
            &self.standardizer,
            well,
            impute_pe,
        )
    }

    /// Inference-mode logits for a prepared (standardized) window.
    pub fn logits(&self, window: &Tensor<f32>) -> Result<Tensor<f32>> {
        Ok(infer(&self.spec, &self.params, std::slice::from_ref(window))?.remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands() {
        assert_eq!(ConfidenceBand::of(0.7), ConfidenceBand::High);
        assert_eq!(ConfidenceBand::of(0.69), ConfidenceBand::Medium);
        assert_eq!(ConfidenceBand::of(0.5), ConfidenceBand::Medium);
        assert_eq!(ConfidenceBand::of(0.49), ConfidenceBand::Low);
    }
}
