use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::welldata::{NUM_CHANNELS, NUM_FACIES};

/// Channel counts and kernel sizes of one four-branch inception block.
///
/// Branches, in concatenation order: 1×1 conv; 1×1 reduce then small-kernel
/// conv; 1×1 reduce then large-kernel conv; 3-wide max pool then 1×1 conv.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InceptionSpec {
    pub branch_1x1: usize,
    pub reduce_small: usize,
    pub small_kernel: usize,
    pub small_channels: usize,
    pub reduce_large: usize,
    pub large_kernel: usize,
    pub large_channels: usize,
    pub pool_proj: usize,
}

impl Default for InceptionSpec {
    fn default() -> Self {
        InceptionSpec {
            branch_1x1: 8,
            reduce_small: 8,
            small_kernel: 3,
            small_channels: 16,
            reduce_large: 8,
            large_kernel: 7,
            large_channels: 16,
            pool_proj: 8,
        }
    }
}

impl InceptionSpec {
    pub fn out_channels(&self) -> usize {
        self.branch_1x1 + self.small_channels + self.large_channels + self.pool_proj
    }

    pub fn branch_channels(&self) -> [usize; 4] {
        [
            self.branch_1x1,
            self.small_channels,
            self.large_channels,
            self.pool_proj,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            self.branch_1x1,
            self.reduce_small,
            self.small_channels,
            self.reduce_large,
            self.large_channels,
            self.pool_proj,
        ];
        if counts.contains(&0) {
            return Err(Error::Config(format!(
                "inception channel counts must be >= 1: {self:?}"
            )));
        }
        if self.small_kernel.is_multiple_of(2) || self.large_kernel.is_multiple_of(2) {
            return Err(Error::Config("inception kernel sizes must be odd".into()));
        }
        if self.small_kernel >= self.large_kernel {
            return Err(Error::Config(format!(
                "small kernel {} must be shorter than large kernel {}",
                self.small_kernel, self.large_kernel
            )));
        }
        Ok(())
    }
}

/// Plain same-padded convolution + ReLU applied before the first stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemSpec {
    pub kernel: usize,
    pub channels: usize,
}

/// Declarative network topology:
/// `stem? → [inception → maxpool(2, 2)]* → flatten → [dense → relu → dropout]* → dense(classes)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub in_channels: usize,
    pub window: usize,
    pub stem: Option<StemSpec>,
    pub stages: Vec<InceptionSpec>,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub classes: usize,
}

/// Stride-2 pooling after each stage (ceil mode).
pub const STAGE_POOL: usize = 2;

impl ModelSpec {
    /// Stem conv k=5/16 ch, two default inception stages, fc 64 with dropout 0.5, fc 9.
    pub fn default_for_window(window: usize) -> Self {
        ModelSpec {
            in_channels: NUM_CHANNELS,
            window,
            stem: Some(StemSpec {
                kernel: 5,
                channels: 16,
            }),
            stages: vec![InceptionSpec::default(); 2],
            hidden: vec![64],
            dropout: 0.5,
            classes: NUM_FACIES,
        }
    }

    /// A small single-stage model used for gradient checks.
    pub fn tiny(window: usize) -> Self {
        ModelSpec {
            in_channels: NUM_CHANNELS,
            window,
            stem: Some(StemSpec {
                kernel: 3,
                channels: 4,
            }),
            stages: vec![InceptionSpec {
                branch_1x1: 2,
                reduce_small: 2,
                small_kernel: 3,
                small_channels: 3,
                reduce_large: 2,
                large_kernel: 5,
                large_channels: 3,
                pool_proj: 2,
            }],
            hidden: vec![8],
            dropout: 0.5,
            classes: NUM_FACIES,
        }
    }

    /// Softmax regression on the flattened window: no hidden nonlinearity.
    pub fn linear(window: usize) -> Self {
        ModelSpec {
            in_channels: NUM_CHANNELS,
            window,
            stem: None,
            stages: vec![],
            hidden: vec![],
            dropout: 0.0,
            classes: NUM_FACIES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.classes < 2 {
            return Err(Error::Config(
                "model needs >= 1 input channel and >= 2 classes".into(),
            ));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::Config(format!("window {} must be odd", self.window)));
        }
        if let Some(stem) = &self.stem {
            if stem.kernel.is_multiple_of(2) || stem.channels == 0 {
                return Err(Error::Config(
                    "stem kernel must be odd and channels >= 1".into(),
                ));
            }
        }
        for s in &self.stages {
            s.validate()?;
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} not in [0, 1)",
                self.dropout
            )));
        }
        self.feature_shape().map(|_| ())
    }

    /// `[channels, length]` entering each stage, then the final feature map.
    pub fn feature_shapes(&self) -> Result<Vec<[usize; 2]>> {
        let mut shape = [self.in_channels, self.window];
        if let Some(stem) = &self.stem {
            shape[0] = stem.channels;
        }
        let mut shapes = vec![shape];
        for (i, s) in self.stages.iter().enumerate() {
            if shape[1] < STAGE_POOL {
                return Err(Error::Config(format!(
                    "feature length {} too short to pool after stage {i}",
                    shape[1]
                )));
            }
            shape = [
                s.out_channels(),
                (shape[1] - STAGE_POOL).div_ceil(STAGE_POOL) + 1,
            ];
            shapes.push(shape);
        }
        Ok(shapes)
    }

    pub fn feature_shape(&self) -> Result<[usize; 2]> {
        Ok(*self.feature_shapes()?.last().unwrap())
    }

    /// Length of the flattened feature vector fed to the first dense layer.
    pub fn flatten_size(&self) -> Result<usize> {
        let [c, l] = self.feature_shape()?;
        Ok(c * l)
    }

    /// Names, shapes and fan-in of every parameter tensor in storage order.
    pub fn param_shapes(&self) -> Result<Vec<ParamShape>> {
        let mut out = Vec::new();
        let mut push = |name: String, shape: Vec<usize>, fan_in: usize| {
            let bias = vec![shape[0]];
            out.push(ParamShape {
                name: format!("{name}.w"),
                shape,
                fan_in,
            });
            out.push(ParamShape {
                name: format!("{name}.b"),
                shape: bias,
                fan_in: 0,
            });
        };
        let mut c = self.in_channels;
        if let Some(stem) = &self.stem {
            push(
                "stem".into(),
                vec![stem.channels, c, stem.kernel],
                c * stem.kernel,
            );
            c = stem.channels;
        }
        for (i, s) in self.stages.iter().enumerate() {
            let p = |b: &str| format!("stage{i}.{b}");
            push(p("b1"), vec![s.branch_1x1, c, 1], c);
            push(p("b2_reduce"), vec![s.reduce_small, c, 1], c);
            push(
                p("b2"),
                vec![s.small_channels, s.reduce_small, s.small_kernel],
                s.reduce_small * s.small_kernel,
            );
            push(p("b3_reduce"), vec![s.reduce_large, c, 1], c);
            push(
                p("b3"),
                vec![s.large_channels, s.reduce_large, s.large_kernel],
                s.reduce_large * s.large_kernel,
            );
            push(p("b4"), vec![s.pool_proj, c, 1], c);
            c = s.out_channels();
        }
        let mut n = self.flatten_size()?;
        for (j, &h) in self.hidden.iter().enumerate() {
            push(format!("fc{j}"), vec![h, n], n);
            n = h;
        }
        push("out".into(), vec![self.classes, n], n);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamShape {
    pub name: String,
    pub shape: Vec<usize>,
    /// Inputs feeding each output unit; 0 for biases.
    pub fan_in: usize,
}
