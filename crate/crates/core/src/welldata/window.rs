use std::sync::Arc;

use super::{Well, NUM_CHANNELS};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// One labeled depth window.
#[derive(Debug, Clone)]
pub struct Example<T> {
    /// `[channels, W]`, centered on `depth`.
    pub input: Tensor<T>,
    pub label: u8,
    pub well: Arc<str>,
    pub depth: f64,
}

#[derive(Debug, Clone)]
pub struct WindowSet<T> {
    pub window: usize,
    pub examples: Vec<Example<T>>,
}

impl<T> WindowSet<T> {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn extend(&mut self, other: WindowSet<T>) {
        self.examples.extend(other.examples);
    }
}

fn check_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "window length {window} must be odd and >= 1"
        )));
    }
    Ok(())
}

/// Window of `window` samples centered on sample `center`; positions past
/// either end of the well repeat the edge sample.
pub fn window_at<T: Scalar>(well: &Well, center: usize, window: usize) -> Tensor<T> {
    let half = (window / 2) as isize;
    let last = well.len() as isize - 1;
    let mut data = Vec::with_capacity(NUM_CHANNELS * window);
    for ch in &well.channels {
        for off in -half..=half {
            let i = (center as isize + off).clamp(0, last) as usize;
            data.push(T::from_f64(ch[i]));
        }
    }
    Tensor::new(vec![NUM_CHANNELS, window], data).expect("window shape")
}

/// One example per labeled sample of `well`.
pub fn extract_windows<T: Scalar>(well: &Well, window: usize) -> Result<WindowSet<T>> {
    check_window(window)?;
    let labels = well.labels.as_ref().ok_or_else(|| {
        Error::MissingLabels(format!(
            "well `{}` has no facies labels; use the prediction path",
            well.name
        ))
    })?;
    let name: Arc<str> = Arc::from(well.name.as_str());
    let examples = (0..well.len())
        .map(|i| Example {
            input: window_at(well, i, window),
            label: labels[i],
            well: name.clone(),
            depth: well.depth[i],
        })
        .collect();
    Ok(WindowSet { window, examples })
}

/// Unlabeled windows for every sample of `well`, in depth order.
pub fn prediction_windows<T: Scalar>(well: &Well, window: usize) -> Result<Vec<Tensor<T>>> {
    check_window(window)?;
    if well.is_empty() {
        return Ok(vec![]);
    }
    Ok((0..well.len())
        .map(|i| window_at(well, i, window))
        .collect())
}
