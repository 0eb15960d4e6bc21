//! `.fnet` checkpoint files.
//!
//! A UTF-8 manifest followed by a raw parameter blob:
//!
//! ```text
//! FACIESNET-CHECKPOINT
//! version = 1
//! seed = 7
//! [spec]
//! in_channels = 7
//! window = 31
//! classes = 9
//! dropout = 0.5
//! stem = 5 16            # kernel channels, or `none`
//! stage = 8 8 3 16 8 7 16 8
//! hidden = 64
//! [standardizer]
//! GR,64.93,16.72
//! ...
//! [train_counts]         # optional
//! 268 940 780 271 296 582 141 686 185
//! [params]
//! stem.w 16 7 5
//! ...
//! [end]
//! <little-endian binary32 values of every tensor, in manifest order>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{InceptionSpec, ModelParams, ModelSpec, StemSpec};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::welldata::{FaciesCounts, Standardizer, NUM_FACIES};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const CHECKPOINT_EXTENSION: &str = "fnet";
const MAGIC: &str = "FACIESNET-CHECKPOINT";
const END: &[u8] = b"[end]\n";

/// A trained model with everything needed to reproduce its predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub params: ModelParams<f32>,
    pub standardizer: Standardizer,
    pub seed: u64,
    /// Facies histogram of the training wells, when known.
    pub train_counts: Option<FaciesCounts>,
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.params.validate(&self.spec)?;
        let s = &self.spec;
        let mut m = String::new();
        let _ = writeln!(
            m,
            "{MAGIC}\nversion = {CHECKPOINT_VERSION}\nseed = {}",
            self.seed
        );
        let _ = writeln!(
            m,
            "[spec]\nin_channels = {}\nwindow = {}\nclasses = {}\ndropout = {}",
            s.in_channels, s.window, s.classes, s.dropout
        );
        match &s.stem {
            None => m.push_str("stem = none\n"),
            Some(st) => {
                let _ = writeln!(m, "stem = {} {}", st.kernel, st.channels);
            }
        }
        for st in &s.stages {
            let _ = writeln!(
                m,
                "stage = {}",
                join([
                    st.branch_1x1,
                    st.reduce_small,
                    st.small_kernel,
                    st.small_channels,
                    st.reduce_large,
                    st.large_kernel,
                    st.large_channels,
                    st.pool_proj
                ])
            );
        }
        let _ = writeln!(m, "hidden = {}", join(&s.hidden));
        m.push_str("[standardizer]\n");
        let st = &self.standardizer;
        for ((c, mean), std) in st.channels.iter().zip(&st.mean).zip(&st.std) {
            let _ = writeln!(m, "{c},{mean},{std}");
        }
        if let Some(counts) = &self.train_counts {
            let _ = writeln!(m, "[train_counts]\n{}", join(counts));
        }
        m.push_str("[params]\n");
        for (name, t) in self.params.names.iter().zip(&self.params.tensors) {
            let _ = writeln!(m, "{name} {}", join(t.shape()));
        }
        let mut bytes = m.into_bytes();
        bytes.extend_from_slice(END);
        for v in self.params.flat() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(MAGIC.as_bytes()) || bytes.get(MAGIC.len()) != Some(&b'\n') {
            return Err(Error::Format(
                "not a faciesnet checkpoint (bad magic)".into(),
            ));
        }
        let split = bytes
            .windows(END.len() + 1)
            .position(|w| w[0] == b'\n' && &w[1..] == END)
            .ok_or_else(|| Error::Format("checkpoint manifest is truncated".into()))?;
        let manifest = std::str::from_utf8(&bytes[..split + 1])
            .map_err(|_| Error::Format("checkpoint manifest is not UTF-8".into()))?;
        let blob = &bytes[split + 1 + END.len()..];
        Manifest::parse(manifest)?.build(blob)
    }
}

#[derive(Default)]
struct Manifest<'a> {
    version: Option<u32>,
    seed: Option<u64>,
    spec: Vec<(usize, &'a str, &'a str)>,
    standardizer: Vec<(usize, &'a str)>,
    counts: Option<(usize, &'a str)>,
    params: Vec<(usize, &'a str)>,
}

fn bad(row: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        row,
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(row: usize, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| bad(row, format!("`{s}` is not a valid number")))
}

fn nums(row: usize, s: &str) -> Result<Vec<usize>> {
    s.split_whitespace().map(|t| num(row, t)).collect()
}

impl<'a> Manifest<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut m = Manifest::default();
        let mut section = "";
        for (i, line) in text.lines().enumerate().skip(1) {
            let row = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                section = match line {
                    "[spec]" | "[standardizer]" | "[train_counts]" | "[params]" => line,
                    _ => return Err(bad(row, format!("unknown section {line}"))),
                };
                continue;
            }
            match section {
                "" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| bad(row, "expected key = value"))?;
                    match k.trim() {
                        "version" => m.version = Some(num(row, v)?),
                        "seed" => m.seed = Some(num(row, v)?),
                        k => return Err(bad(row, format!("unknown header key `{k}`"))),
                    }
                }
                "[spec]" => {
                    let (k, v) = line
                        .split_once('=')
                        .ok_or_else(|| bad(row, "expected key = value"))?;
                    m.spec.push((row, k.trim(), v.trim()));
                }
                "[standardizer]" => m.standardizer.push((row, line)),
                "[train_counts]" => m.counts = Some((row, line)),
                _ => m.params.push((row, line)),
            }
        }
        Ok(m)
    }

    fn build(self, blob: &[u8]) -> Result<Checkpoint> {
        match self.version {
            Some(CHECKPOINT_VERSION) => {}
            Some(v) => {
                return Err(Error::Format(format!(
                    "checkpoint version {v} is not supported (expected {CHECKPOINT_VERSION})"
                )))
            }
            None => return Err(Error::Format("checkpoint has no version".into())),
        }
        let seed = self
            .seed
            .ok_or_else(|| Error::Format("checkpoint has no seed".into()))?;

        let mut spec = ModelSpec {
            in_channels: 0,
            window: 0,
            stem: None,
            stages: vec![],
            hidden: vec![],
            dropout: 0.0,
            classes: 0,
        };
        for (row, k, v) in self.spec {
            match k {
                "in_channels" => spec.in_channels = num(row, v)?,
                "window" => spec.window = num(row, v)?,
                "classes" => spec.classes = num(row, v)?,
                "dropout" => spec.dropout = num(row, v)?,
                "hidden" => spec.hidden = nums(row, v)?,
                "stem" if v == "none" => spec.stem = None,
                "stem" => match nums(row, v)?[..] {
                    [kernel, channels] => spec.stem = Some(StemSpec { kernel, channels }),
                    _ => return Err(bad(row, "stem needs `kernel channels`")),
                },
                "stage" => match nums(row, v)?[..] {
                    [a, rs, ks, b, rl, kl, c, d] => spec.stages.push(InceptionSpec {
                        branch_1x1: a,
                        reduce_small: rs,
                        small_kernel: ks,
                        small_channels: b,
                        reduce_large: rl,
                        large_kernel: kl,
                        large_channels: c,
                        pool_proj: d,
                    }),
                    _ => return Err(bad(row, "stage needs 8 integers")),
                },
                _ => return Err(bad(row, format!("unknown spec key `{k}`"))),
            }
        }
        spec.validate()
            .map_err(|e| Error::Format(format!("checkpoint spec is invalid: {e}")))?;

        let mut st_text = String::from("# faciesnet standardizer v1\nchannel,mean,std\n");
        for (_, line) in &self.standardizer {
            st_text.push_str(line);
            st_text.push('\n');
        }
        let standardizer = Standardizer::parse(&st_text)?;

        let train_counts = match self.counts {
            None => None,
            Some((row, line)) => {
                let v = nums(row, line)?;
                let counts: FaciesCounts = v
                    .try_into()
                    .map_err(|_| bad(row, format!("train_counts needs {NUM_FACIES} values")))?;
                Some(counts)
            }
        };

        let expected = spec.param_shapes()?;
        if expected.len() != self.params.len() {
            return Err(Error::Format(format!(
                "manifest lists {} parameter tensors, spec implies {}",
                self.params.len(),
                expected.len()
            )));
        }
        let mut names = Vec::with_capacity(expected.len());
        let mut shapes = Vec::with_capacity(expected.len());
        for ((row, line), exp) in self.params.iter().zip(&expected) {
            let mut parts = line.split_whitespace();
            let name = parts.next().unwrap_or("");
            let shape: Vec<usize> = parts.map(|t| num(*row, t)).collect::<Result<_>>()?;
            if name != exp.name || shape != exp.shape {
                return Err(Error::Format(format!(
                    "manifest tensor `{name}` {shape:?} disagrees with spec `{}` {:?}",
                    exp.name, exp.shape
                )));
            }
            names.push(name.to_string());
            shapes.push(shape);
        }
        let total: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
        if blob.len() != total * 4 {
            return Err(Error::Format(format!(
                "parameter blob holds {} bytes, manifest needs {}",
                blob.len(),
                total * 4
            )));
        }
        let mut values = blob
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let tensors = shapes
            .into_iter()
            .map(|shape| {
                let n = shape.iter().product();
                Tensor::new(shape, values.by_ref().take(n).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        let params = ModelParams { names, tensors };
        params
            .validate(&spec)
            .map_err(|e| Error::Format(format!("checkpoint parameters are invalid: {e}")))?;
        Ok(Checkpoint {
            spec,
            params,
            standardizer,
            seed,
            train_counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    fn sample() -> Checkpoint {
        let spec = ModelSpec::default_for_window(15);
        let mut standardizer = Standardizer::identity();
        standardizer.mean[0] = 64.934_567_1;
        standardizer.std[0] = 0.1 + 0.2;
        Checkpoint {
            params: init_params(&spec, 11).unwrap(),
            spec,
            standardizer,
            seed: 11,
            train_counts: Some([1, 2, 3, 4, 5, 6, 7, 8, 9]),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = sample();
        let bytes = c.to_bytes().unwrap();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
        let mut no_stem = sample();
        no_stem.spec.stem = None;
        no_stem.spec.hidden = vec![];
        no_stem.train_counts = None;
        no_stem.params = init_params(&no_stem.spec, 1).unwrap();
        assert_eq!(
            Checkpoint::from_bytes(&no_stem.to_bytes().unwrap()).unwrap(),
            no_stem
        );
    }

    #[test]
    fn corruption_detected() {
        let bytes = sample().to_bytes().unwrap();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            Checkpoint::from_bytes(&bad_magic),
            Err(Error::Format(_))
        ));
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..100]).is_err());
        let text = String::from_utf8_lossy(&bytes).into_owned();
        assert!(text.contains("version = 1"));
        let v2: Vec<u8> = {
            let i = bytes.windows(11).position(|w| w == b"version = 1").unwrap();
            let mut b = bytes.clone();
            b[i + 10] = b'2';
            b
        };
        let err = Checkpoint::from_bytes(&v2).unwrap_err();
        assert!(err.to_string().contains("version 2"), "{err}");
        let shape: Vec<u8> = {
            let i = bytes
                .windows(12)
                .position(|w| w == b"stem.w 16 7 ")
                .unwrap();
            let mut b = bytes.clone();
            b[i + 7] = b'2';
            b
        };
        assert!(Checkpoint::from_bytes(&shape).is_err());
    }
}
