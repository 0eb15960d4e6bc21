//! Run configuration: a flat `key = value` file with one section per module.
//!
//! ```text
//! # comment
//! [data]
//! path = wells.csv
//! blind_wells = SHANKLE, NEWBY
//! allow_missing_pe = false
//!
//! [train]
//! window = 31
//! epochs = 60
//! seed = 7
//!
//! [model]
//! stem_kernel = 5
//! hidden = 64
//!
//! [adjacency]
//! D = PS
//! ```
//!
//! Unknown sections and keys are rejected. Every problem in a document is
//! reported together as one [`Error::ConfigList`].

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::network::{InceptionSpec, ModelSpec, StemSpec};
use crate::synth::SynthConfig;
use crate::training::TrainConfig;
use crate::welldata::{FaciesTable, FACIES_CODES, NUM_CHANNELS, NUM_FACIES};

pub const SECTIONS: [&str; 7] = [
    "data",
    "model",
    "train",
    "synth",
    "adjacency",
    "output",
    "run",
];

/// Architecture knobs; window and dropout come from [`TrainConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Stem kernel length; `stem_channels = 0` removes the stem.
    pub stem_kernel: usize,
    pub stem_channels: usize,
    pub stages: usize,
    pub inception: InceptionSpec,
    pub hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let spec = ModelSpec::default_for_window(31);
        let stem = spec.stem.expect("default model has a stem");
        ModelConfig {
            stem_kernel: stem.kernel,
            stem_channels: stem.channels,
            stages: spec.stages.len(),
            inception: spec.stages[0],
            hidden: spec.hidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub blind_wells: Vec<String>,
    pub allow_missing_pe: bool,
    pub train: TrainConfig,
    /// Hold out the last training well for validation when
    /// `train.validation_wells` is empty.
    pub hold_out_validation: bool,
    pub model: ModelConfig,
    pub synth: SynthConfig,
    pub synth_wells: usize,
    pub adjacency: FaciesTable,
    pub output: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            blind_wells: vec![],
            allow_missing_pe: false,
            train: TrainConfig::default(),
            hold_out_validation: true,
            model: ModelConfig::default(),
            synth: SynthConfig::default(),
            synth_wells: 9,
            adjacency: FaciesTable::default(),
            output: PathBuf::from("out"),
            threads: None,
        }
    }
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("`{v}` is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse()
        .map_err(|_| format!("`{v}` is not a valid number"))
}

fn parse_f64(v: &str) -> std::result::Result<f64, String> {
    parse_num::<f64>(v).and_then(|x| {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("`{v}` is not finite"))
        }
    })
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn parse_usize_list(v: &str) -> std::result::Result<Vec<usize>, String> {
    parse_list(v).iter().map(|s| parse_num(s)).collect()
}

impl RunConfig {
    /// Parses a config document on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// Applies every assignment of `text`, collecting all errors.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut errors = Vec::new();
        let mut section: Option<String> = None;
        let mut adjacency: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let row = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                match name.strip_suffix(']').map(str::trim) {
                    Some(s) if SECTIONS.contains(&s) => section = Some(s.to_string()),
                    Some(s) => {
                        errors.push(format!("line {row}: unknown section [{s}]"));
                        // keys under an unknown section are not reported again
                        section = Some(String::new());
                    }
                    None => errors.push(format!("line {row}: malformed section header `{line}`")),
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {row}: expected `key = value`, got `{line}`"));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match section.as_deref() {
                None => errors.push(format!("line {row}: `{key}` appears outside any section")),
                Some("") => {}
                Some("adjacency") => adjacency.push((row, key.to_string(), value.to_string())),
                Some(s) => {
                    if let Err(e) = self.set(s, key, value) {
                        errors.push(format!("line {row}: {e}"));
                    }
                }
            }
        }
        if !adjacency.is_empty() {
            match Self::adjacency_from(&adjacency) {
                Ok(t) => self.adjacency = t,
                Err(e) => errors.extend(e),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errors))
        }
    }

    /// An `[adjacency]` section replaces the default table: `CODE = NEIGHBOURS`
    /// per line, or `file = path` to load an adjacency document.
    fn adjacency_from(
        lines: &[(usize, String, String)],
    ) -> std::result::Result<FaciesTable, Vec<String>> {
        let mut errors = Vec::new();
        let mut entries = Vec::new();
        let mut table = None;
        for (row, key, value) in lines {
            if key == "file" {
                match std::fs::read_to_string(value) {
                    Ok(text) => match FaciesTable::parse(&text) {
                        Ok(t) => table = Some(t),
                        Err(e) => errors.push(format!("line {row}: adjacency file {value}: {e}")),
                    },
                    Err(e) => errors.push(format!(
                        "line {row}: cannot read adjacency file {value}: {e}"
                    )),
                }
            } else {
                entries.push(format!("{key}: {value}"));
            }
        }
        if !entries.is_empty() {
            if table.is_some() {
                errors.push("[adjacency] mixes `file` with inline entries".to_string());
            }
            match FaciesTable::parse(&entries.join("\n")) {
                Ok(t) => table = Some(t),
                Err(e) => errors.push(format!("[adjacency]: {e}")),
            }
        }
        if errors.is_empty() {
            Ok(table.unwrap_or_else(FaciesTable::empty))
        } else {
            Err(errors)
        }
    }

    /// Sets one key; `section` must not be `adjacency`.
    pub fn set(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
    ) -> std::result::Result<(), String> {
        let t = &mut self.train;
        let m = &mut self.model;
        let s = &mut self.synth;
        match (section, key) {
            ("data", "path") => self.data = Some(PathBuf::from(value)),
            ("data", "blind_wells") => self.blind_wells = parse_list(value),
            ("data", "allow_missing_pe") => self.allow_missing_pe = parse_bool(value)?,

            ("train", "window") => t.window = parse_num(value)?,
            ("train", "batch_size") => t.batch_size = parse_num(value)?,
            ("train", "learning_rate") => t.learning_rate = parse_f64(value)?,
            ("train", "momentum") => t.momentum = parse_f64(value)?,
            ("train", "epochs") => t.epochs = parse_num(value)?,
            ("train", "dropout") => t.dropout = parse_f64(value)?,
            ("train", "seed") => t.seed = parse_num(value)?,
            ("train", "class_weighting") => t.class_weighting = parse_bool(value)?,
            ("train", "validation_wells") => t.validation_wells = parse_list(value),
            ("train", "hold_out_validation") => self.hold_out_validation = parse_bool(value)?,
            ("train", "patience") => t.patience = parse_num(value)?,
            ("train", "lr_decay_every") => t.lr_decay_every = parse_num(value)?,
            ("train", "lr_decay_factor") => t.lr_decay_factor = parse_f64(value)?,

            ("model", "stem_kernel") => m.stem_kernel = parse_num(value)?,
            ("model", "stem_channels") => m.stem_channels = parse_num(value)?,
            ("model", "stages") => m.stages = parse_num(value)?,
            ("model", "branch_1x1") => m.inception.branch_1x1 = parse_num(value)?,
            ("model", "reduce_small") => m.inception.reduce_small = parse_num(value)?,
            ("model", "small_kernel") => m.inception.small_kernel = parse_num(value)?,
            ("model", "small_channels") => m.inception.small_channels = parse_num(value)?,
            ("model", "reduce_large") => m.inception.reduce_large = parse_num(value)?,
            ("model", "large_kernel") => m.inception.large_kernel = parse_num(value)?,
            ("model", "large_channels") => m.inception.large_channels = parse_num(value)?,
            ("model", "pool_proj") => m.inception.pool_proj = parse_num(value)?,
            ("model", "hidden") => m.hidden = parse_usize_list(value)?,

            ("synth", "wells") => self.synth_wells = parse_num(value)?,
            ("synth", "samples") => s.n_samples = parse_num(value)?,
            ("synth", "p_stay") => s.p_stay = parse_f64(value)?,
            ("synth", "sigma") => s.sigma = parse_f64(value)?,
            ("synth", "seed") => s.seed = parse_num(value)?,
            ("synth", "depth_start") => s.depth_start = parse_f64(value)?,
            ("synth", "depth_step") => s.depth_step = parse_f64(value)?,
            ("synth", "mean_spacing") => {
                let d = parse_f64(value)?;
                s.means = (1..=NUM_FACIES)
                    .map(|f| [d * f as f64; NUM_CHANNELS])
                    .collect();
            }

            ("output", "dir") => self.output = PathBuf::from(value),
            ("run", "threads") => {
                let n: usize = parse_num(value)?;
                self.threads = (n > 0).then_some(n);
            }
            ("adjacency", _) => return Err("adjacency entries must go through apply_text".into()),
            _ => return Err(format!("unknown key `{key}` in [{section}]")),
        }
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn set_override(&mut self, assignment: &str) -> Result<()> {
        let bad = || {
            Error::Config(format!(
                "override `{assignment}` must look like section.key=value"
            ))
        };
        let (path, value) = assignment.split_once('=').ok_or_else(bad)?;
        let (section, key) = path.trim().split_once('.').ok_or_else(bad)?;
        if section == "adjacency" {
            return self.apply_text(&format!("[adjacency]\n{key} = {value}"));
        }
        if !SECTIONS.contains(&section) {
            return Err(Error::Config(format!(
                "unknown section `{section}` in override"
            )));
        }
        self.set(section, key.trim(), value.trim())
            .map_err(Error::Config)
    }

    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        ModelSpec {
            stem: (m.stem_channels > 0).then_some(StemSpec {
                kernel: m.stem_kernel,
                channels: m.stem_channels,
            }),
            stages: vec![m.inception; m.stages],
            hidden: m.hidden.clone(),
            ..self.train.default_spec()
        }
    }

    /// Validates the training, model and synthesis settings together.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let mut collect = |r: Result<()>| match r {
            Ok(()) => {}
            Err(Error::ConfigList(v)) => errors.extend(v),
            Err(e) => errors.push(e.to_string()),
        };
        collect(self.train.validate());
        if self.train.window % 2 == 1 {
            collect(self.model_spec().validate());
        }
        collect(self.synth.validate());
        if self.synth_wells == 0 {
            errors.push("synth wells must be >= 1".into());
        }
        if let Some(w) = self
            .train
            .validation_wells
            .iter()
            .find(|w| self.blind_wells.contains(w))
        {
            errors.push(format!("well `{w}` is both a blind and a validation well"));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigList(errors))
        }
    }

    /// The resolved configuration as a document accepted by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let m = &self.model;
        let s = &self.synth;
        let join = |v: &[String]| v.join(", ");
        let hidden: Vec<String> = m.hidden.iter().map(|h| h.to_string()).collect();
        let mut out = String::from("[data]\n");
        if let Some(p) = &self.data {
            out += &format!("path = {}\n", p.display());
        }
        out += &format!("blind_wells = {}\n", join(&self.blind_wells));
        out += &format!("allow_missing_pe = {}\n", self.allow_missing_pe);
        out += &format!(
            "\n[train]\nwindow = {}\nbatch_size = {}\nlearning_rate = {}\nmomentum = {}\nepochs = {}\n\
             dropout = {}\nseed = {}\nclass_weighting = {}\nvalidation_wells = {}\nhold_out_validation = {}\n\
             patience = {}\nlr_decay_every = {}\nlr_decay_factor = {}\n",
            t.window,
            t.batch_size,
            t.learning_rate,
            t.momentum,
            t.epochs,
            t.dropout,
            t.seed,
            t.class_weighting,
            join(&t.validation_wells),
            self.hold_out_validation,
            t.patience,
            t.lr_decay_every,
            t.lr_decay_factor,
        );
        let i = &m.inception;
        out += &format!(
            "\n[model]\nstem_kernel = {}\nstem_channels = {}\nstages = {}\nbranch_1x1 = {}\nreduce_small = {}\n\
             small_kernel = {}\nsmall_channels = {}\nreduce_large = {}\nlarge_kernel = {}\nlarge_channels = {}\n\
             pool_proj = {}\nhidden = {}\n",
            m.stem_kernel,
            m.stem_channels,
            m.stages,
            i.branch_1x1,
            i.reduce_small,
            i.small_kernel,
            i.small_channels,
            i.reduce_large,
            i.large_kernel,
            i.large_channels,
            i.pool_proj,
            hidden.join(", "),
        );
        out += &format!(
            "\n[synth]\nwells = {}\nsamples = {}\np_stay = {}\nsigma = {}\nseed = {}\ndepth_start = {}\ndepth_step = {}\n",
            self.synth_wells, s.n_samples, s.p_stay, s.sigma, s.seed, s.depth_start, s.depth_step,
        );
        out += "\n[adjacency]\n";
        for f in 1..=NUM_FACIES as u8 {
            let n: Vec<&str> = self
                .adjacency
                .neighbours(f)
                .iter()
                .map(|&g| FACIES_CODES[g as usize - 1])
                .collect();
            if !n.is_empty() {
                out += &format!("{} = {}\n", FACIES_CODES[f as usize - 1], n.join(" "));
            }
        }
        out += &format!("\n[output]\ndir = {}\n", self.output.display());
        out += &format!("\n[run]\nthreads = {}\n", self.threads.unwrap_or(0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.model_spec(), ModelSpec::default_for_window(31));
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn values_are_applied() {
        let cfg = RunConfig::parse(
            "# run\n[train]\nwindow = 15\nseed = 7 # trailing\n[data]\nblind_wells = A, B\n\
             [model]\nstem_channels = 0\nhidden =\n[adjacency]\nSS = FSiS\n",
        )
        .unwrap();
        assert_eq!(cfg.train.window, 15);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.blind_wells, ["A", "B"]);
        let spec = cfg.model_spec();
        assert!(spec.stem.is_none() && spec.hidden.is_empty() && spec.window == 15);
        assert!(cfg.adjacency.is_adjacent(1, 3) && cfg.adjacency.is_adjacent(3, 1));
        assert!(!cfg.adjacency.is_adjacent(1, 2));
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn all_errors_listed() {
        let text =
            "[train]\nwindw = 3\nepochs = many\n[nope]\nx = 1\nstray\n[model]\nhidden = 4, x\n";
        match RunConfig::parse(text) {
            Err(Error::ConfigList(v)) => {
                assert_eq!(v.len(), 5, "{v:?}");
                assert!(v[0].contains("windw"));
            }
            other => panic!("{other:?}"),
        }
        assert!(RunConfig::parse("window = 3\n").is_err());
        assert!(RunConfig::parse("[adjacency]\nSS = XX\n").is_err());
    }

    #[test]
    fn validation_collects() {
        let mut cfg = RunConfig::default();
        cfg.train.window = 4;
        cfg.train.momentum = 1.5;
        cfg.synth.p_stay = 2.0;
        match cfg.validate() {
            Err(Error::ConfigList(v)) => assert_eq!(v.len(), 3, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.set_override("train.epochs=3").unwrap();
        cfg.set_override("adjacency.D=BS").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert!(cfg.adjacency.is_adjacent(7, 9));
        assert!(cfg.set_override("train.nope=1").is_err());
        assert!(cfg.set_override("epochs=1").is_err());
    }
}
