use crate::error::{Error, Result};
use crate::tensor::{layer_backward, softmax_cross_entropy, Scalar, Tensor};

/// Mean (optionally class-weighted) cross-entropy over a `[B, F]` logit
/// batch and its gradient `w_y (p - onehot(y)) / B`. Labels are 1-based.
pub fn cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[u8],
    class_weights: Option<&[f64]>,
) -> Result<(T, Tensor<T>)> {
    if logits.rank() != 2 || logits.shape()[0] != labels.len() {
        return Err(Error::Dimension(format!(
            "logits {:?} do not match {} labels",
            logits.shape(),
            labels.len()
        )));
    }
    let (b, f) = (logits.shape()[0], logits.shape()[1]);
    if let Some(w) = class_weights {
        if w.len() != f {
            return Err(Error::Dimension(format!(
                "{} class weights for {f} classes",
                w.len()
            )));
        }
    }
    let inv_b = T::one() / T::from_f64(b as f64);
    let mut loss = T::zero();
    let mut grads = Vec::with_capacity(b * f);
    for (i, &label) in labels.iter().enumerate() {
        let y = label_index(label, f)?;
        let w = T::from_f64(class_weights.map_or(1.0, |w| w[y]));
        let (l, cache) = softmax_cross_entropy(&Tensor::from_vec(logits.row(i).to_vec()), y, w)?;
        loss += l;
        let g = layer_backward(&cache, None, &Tensor::from_vec(vec![inv_b]))?;
        grads.extend_from_slice(g.input_grad.data());
    }
    Ok((loss * inv_b, Tensor::new(vec![b, f], grads)?))
}

/// 0-based class index of a 1-based facies label.
pub(crate) fn label_index(label: u8, classes: usize) -> Result<usize> {
    if label == 0 || label as usize > classes {
        return Err(Error::Mismatch(format!(
            "label {label} outside 1..={classes}"
        )));
    }
    Ok(label as usize - 1)
}

/// Inverse-frequency weights `total / (K * count)`, 1 for absent classes,
/// rescaled to mean 1.
pub fn compute_class_weights(counts: &[usize]) -> Vec<f64> {
    let k = counts.len() as f64;
    let total: usize = counts.iter().sum();
    let raw: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if c == 0 {
                1.0
            } else {
                total as f64 / (k * c as f64)
            }
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / k;
    raw.into_iter().map(|w| w / mean).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_prediction_has_zero_loss() {
        let mut row = vec![-1e4f64; 9];
        row[2] = 1e4;
        let logits = Tensor::from_rows(&[row]).unwrap();
        let (loss, _) = cross_entropy(&logits, &[3], None).unwrap();
        assert!(loss.abs() < 1e-12);
    }

    #[test]
    fn uniform_logits_give_ln9() {
        let logits = Tensor::<f64>::zeros(&[5, 9]);
        let (loss, g) = cross_entropy(&logits, &[1, 2, 3, 9, 5], None).unwrap();
        assert!((loss - 9f64.ln()).abs() < 1e-12);
        assert!((loss - 2.1972).abs() < 1e-4);
        for b in 0..5 {
            assert!(g.row(b).iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn label_range() {
        let logits = Tensor::<f64>::zeros(&[1, 9]);
        assert!(cross_entropy(&logits, &[0], None).is_err());
        assert!(cross_entropy(&logits, &[10], None).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(compute_class_weights(&[5; 9]), vec![1.0; 9]);
        let w = compute_class_weights(&[90, 10]);
        assert!((w[0] - 0.2).abs() < 1e-12 && (w[1] - 1.8).abs() < 1e-12);
        let w = compute_class_weights(&[10, 0, 10]);
        // raw [1.5/... ] -> absent class keeps raw weight 1 before rescaling
        let raw = [20.0 / 30.0, 1.0, 20.0 / 30.0];
        let mean = raw.iter().sum::<f64>() / 3.0;
        for (a, r) in w.iter().zip(raw) {
            assert!((a - r / mean).abs() < 1e-12);
        }
    }
}
