//! Synthetic labeled wells from a sticky Markov chain over the facies.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::welldata::{Well, NUM_CHANNELS, NUM_FACIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    /// Probability of keeping the current facies at the next sample.
    pub p_stay: f64,
    /// Channel means per facies, `means[f - 1][channel]`.
    pub means: Vec<[f64; NUM_CHANNELS]>,
    /// Gaussian noise standard deviation added to every channel.
    pub sigma: f64,
    pub seed: u64,
    pub depth_start: f64,
    pub depth_step: f64,
}

impl Default for SynthConfig {
    /// Facies `f` has mean `f` in every channel; sigma 0.5.
    fn default() -> Self {
        SynthConfig {
            n_samples: 2000,
            p_stay: 0.95,
            means: (1..=NUM_FACIES).map(|f| [f as f64; NUM_CHANNELS]).collect(),
            sigma: 0.5,
            seed: 0,
            depth_start: 1000.0,
            depth_step: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.n_samples == 0 {
            errors.push("samples must be >= 1".to_string());
        }
        if !(0.0..1.0).contains(&self.p_stay) {
            errors.push(format!("p_stay = {} not in [0, 1)", self.p_stay));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            errors.push(format!("sigma = {} must be >= 0", self.sigma));
        }
        if self.means.len() != NUM_FACIES || self.means.iter().flatten().any(|m| !m.is_finite()) {
            errors.push(format!(
                "means must be a finite {NUM_FACIES} x {NUM_CHANNELS} matrix"
            ));
        }
        if self.depth_step.is_nan() || self.depth_step <= 0.0 {
            errors.push("depth_step must be > 0".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errors))
        }
    }
}

fn generate(config: &SynthConfig, name: String, stream: Stream) -> Result<Well> {
    config.validate()?;
    let mut rng = stream.rng();
    let noise = Normal::new(0.0, config.sigma).map_err(|e| Error::Config(e.to_string()))?;
    let n = config.n_samples;
    let mut labels = Vec::with_capacity(n);
    let mut state = rng.random_range(0..NUM_FACIES);
    for i in 0..n {
        if i > 0 && rng.random::<f64>() >= config.p_stay {
            // uniform over the other eight states
            let k = rng.random_range(0..NUM_FACIES - 1);
            state = if k >= state { k + 1 } else { k };
        }
        labels.push(state as u8 + 1);
    }
    let mut channels: Vec<Vec<f64>> = (0..NUM_CHANNELS).map(|_| Vec::with_capacity(n)).collect();
    for &l in &labels {
        let mean = &config.means[l as usize - 1];
        for (c, ch) in channels.iter_mut().enumerate() {
            let v = if config.sigma == 0.0 {
                mean[c]
            } else {
                mean[c] + noise.sample(&mut rng)
            };
            ch.push(v);
        }
    }
    let depth = (0..n)
        .map(|i| config.depth_start + config.depth_step * i as f64)
        .collect();
    let mut well = Well::new(name, depth, channels, Some(labels))?;
    well.formation = vec!["SYN".to_string(); n];
    Ok(well)
}

/// A single well named `SYN-0`; identical to the first of [`generate_wells`].
pub fn generate_well(config: &SynthConfig) -> Result<Well> {
    Ok(generate_wells(config, 1)?.remove(0))
}

/// `count` independent wells `SYN-0 ..`; well `i` uses stream `[SYNTH, i]`.
pub fn generate_wells(config: &SynthConfig, count: usize) -> Result<Vec<Well>> {
    let root = Stream::root(config.seed).fork(rng::SYNTH);
    (0..count)
        .map(|i| generate(config, format!("SYN-{i}"), root.fork(i as u64)))
        .collect()
}
