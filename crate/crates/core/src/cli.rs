//! The `faciesnet` command line: `train`, `predict`, `evaluate`,
//! `gradcheck` and `synth`.
//!
//! Exit codes: 0 success, 1 check failure, 2 config error, 3 data/model
//! mismatch, 4 missing labels.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evaluation::{export_plot_data, predictions_csv, EvalReport, PREDICTIONS_FILE};
use crate::gradcheck::{check_seed, GRADCHECK_TOLERANCE};
use crate::network::{load_checkpoint, save_checkpoint, ModelSpec, CHECKPOINT_EXTENSION};
use crate::synth::generate_wells;
use crate::training::train;
use crate::welldata::{parse_csv, split_by_well, write_csv, CsvOptions, FaciesTable, Well};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_MISSING_LABELS: i32 = 4;

pub const MODEL_FILE: &str = "model.fnet";
pub const REPORT_CSV_FILE: &str = "train_report.csv";
pub const SUMMARY_FILE: &str = "train_summary.json";
pub const STANDARDIZER_FILE: &str = "standardizer.txt";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved";

#[derive(Debug, Parser)]
#[command(
    name = "faciesnet",
    version,
    about = "Facies classification from well logs with a 1D inception ConvNet"
)]
pub struct Cli {
    /// Worker threads for data-parallel work (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write the checkpoint and training report.
    Train(TrainArgs),
    /// Per-depth facies, class probabilities and confidence band.
    Predict(PredictArgs),
    /// Score a checkpoint on labeled wells and write plot data.
    Evaluate(EvaluateArgs),
    /// Finite-difference check of the analytic gradients on a tiny model.
    Gradcheck(GradcheckArgs),
    /// Write synthetic labeled wells as CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file (`key = value` with sections).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config value: `--set train.epochs=10`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Well CSV; defaults to `[data] path`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated wells excluded from training.
    #[arg(long, value_delimiter = ',')]
    pub blind_wells: Option<Vec<String>>,
    /// Comma-separated training wells used for early stopping.
    #[arg(long, value_delimiter = ',')]
    pub validation_wells: Option<Vec<String>>,
    /// Accept a missing or gappy PE log, imputing the training mean.
    #[arg(long)]
    pub allow_missing_pe: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub allow_missing_pe: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled well CSV; defaults to `[data] path`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Adjacency document (`CODE: NEIGHBOURS` lines); overrides `[adjacency]`.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Evaluate only these wells (default: every well in the file).
    #[arg(long, value_delimiter = ',')]
    pub blind_wells: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub allow_missing_pe: bool,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Window length of the tiny model.
    #[arg(long, default_value_t = 9)]
    pub window: usize,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 2)]
    pub batch: usize,
    /// Corrupts the analytic gradient of parameters with this name prefix.
    #[arg(long, hide = true)]
    pub inject_fault: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output CSV file.
    #[arg(long, default_value = "synth.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub wells: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub p_stay: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_CONFIG;
        }
        // a pool already built in this process is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let (result, data_command) = match cli.command {
        Command::Train(a) => (cmd_train(a), false),
        Command::Predict(a) => (cmd_predict(a), true),
        Command::Evaluate(a) => (cmd_evaluate(a), true),
        Command::Gradcheck(a) => (cmd_gradcheck(a), false),
        Command::Synth(a) => (cmd_synth(a), false),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e, data_command)
        }
    }
}

/// Maps an error to an exit code. For commands that apply a checkpoint to
/// data, malformed or incompatible input is a data/model mismatch.
pub fn exit_code(e: &Error, data_command: bool) -> i32 {
    match e {
        Error::Config(_) | Error::ConfigList(_) | Error::Io { .. } => EXIT_CONFIG,
        Error::MissingLabels(_) => EXIT_MISSING_LABELS,
        Error::Mismatch(_) | Error::Dimension(_) => EXIT_MISMATCH,
        Error::Format(_) | Error::MissingColumn(_) | Error::Parse { .. } => {
            if data_command {
                EXIT_MISMATCH
            } else {
                EXIT_CONFIG
            }
        }
        Error::Numeric(_) => EXIT_CHECK_FAILED,
    }
}

fn resolve_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mut errors = Vec::new();
    for o in &common.overrides {
        match cfg.set_override(o) {
            Ok(()) => {}
            Err(Error::ConfigList(v)) => errors.extend(v),
            Err(e) => errors.push(e.to_string()),
        }
    }
    if !errors.is_empty() {
        return Err(Error::ConfigList(errors));
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
        cfg.synth.seed = seed;
    }
    Ok(cfg)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn data_path(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.data.clone())
        .ok_or_else(|| Error::Config("no data file: pass --data or set `[data] path`".into()))
}

fn read_wells(path: &Path, allow_missing_pe: bool) -> Result<Vec<Well>> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "data file {} does not exist",
            path.display()
        )));
    }
    parse_csv(path, CsvOptions { allow_missing_pe })
}

pub fn cmd_train(args: TrainArgs) -> Result<i32> {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(d) = &args.data {
        cfg.data = Some(d.clone());
    }
    if let Some(out) = args.out {
        cfg.output = out;
    }
    if let Some(b) = args.blind_wells {
        cfg.blind_wells = b;
    }
    if let Some(v) = args.validation_wells {
        cfg.train.validation_wells = v;
    }
    cfg.allow_missing_pe |= args.allow_missing_pe;
    cfg.train.impute_pe = cfg.allow_missing_pe;
    cfg.validate()?;
    let data = data_path(None, &cfg)?;

    println!("# resolved configuration\n{}", cfg.to_text());
    println!("seed = {}", cfg.train.seed);

    let wells = read_wells(&data, cfg.allow_missing_pe)?;
    let (train_wells, blind) = split_by_well(wells, &cfg.blind_wells)?;
    let validation_names: Vec<String> = if !cfg.train.validation_wells.is_empty() {
        cfg.train.validation_wells.clone()
    } else if cfg.hold_out_validation && train_wells.len() >= 2 {
        vec![train_wells.last().expect("non-empty").name.clone()]
    } else {
        vec![]
    };
    let (train_wells, validation) = split_by_well(train_wells, &validation_names)?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.validation_wells = validation_names;
    println!(
        "training on {} wells, validating on {:?}, holding out {:?}",
        train_wells.len(),
        train_cfg.validation_wells,
        blind.iter().map(|w| w.name.as_str()).collect::<Vec<_>>()
    );

    let spec = cfg.model_spec();
    let (checkpoint, report) = train(&train_cfg, &spec, &train_wells, &validation)?;

    let out = &cfg.output;
    create_dir(out)?;
    let model_path = out.join(MODEL_FILE);
    debug_assert!(MODEL_FILE.ends_with(CHECKPOINT_EXTENSION));
    save_checkpoint(&checkpoint, &model_path)?;
    write_file(&out.join(REPORT_CSV_FILE), report.to_csv())?;
    write_file(&out.join(SUMMARY_FILE), report.summary_json())?;
    write_file(
        &out.join(STANDARDIZER_FILE),
        checkpoint.standardizer.to_text(),
    )?;
    write_file(&out.join(RESOLVED_CONFIG_FILE), cfg.to_text())?;

    let best = &report.epochs[report.best_epoch];
    println!(
        "kept epoch {} of {} (train loss {:.4}, val macro-F1 {})",
        report.best_epoch,
        report.epochs.len(),
        best.train_loss,
        best.val_macro_f1
            .map_or("n/a".to_string(), |f| format!("{f:.4}"))
    );
    println!("wrote {}", model_path.display());
    Ok(EXIT_OK)
}

pub fn cmd_predict(args: PredictArgs) -> Result<i32> {
    let checkpoint = load_checkpoint(&args.model)?;
    let wells = read_wells(&args.data, args.allow_missing_pe)?;
    let mut predictions = Vec::new();
    for w in &wells {
        predictions.extend(checkpoint.predict(w, args.allow_missing_pe)?);
    }
    create_dir(&args.out)?;
    let path = args.out.join(PREDICTIONS_FILE);
    write_file(&path, predictions_csv(&predictions))?;
    println!(
        "{} predictions for {} wells written to {}",
        predictions.len(),
        wells.len(),
        path.display()
    );
    Ok(EXIT_OK)
}

pub fn cmd_evaluate(args: EvaluateArgs) -> Result<i32> {
    let cfg = resolve_config(&args.common)?;
    let table = match &args.adjacency {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            FaciesTable::parse(&text)
                .map_err(|e| Error::Config(format!("adjacency file {}: {e}", p.display())))?
        }
        None => cfg.adjacency.clone(),
    };
    let allow_missing_pe = args.allow_missing_pe || cfg.allow_missing_pe;
    let data = data_path(args.data, &cfg)?;
    let checkpoint = load_checkpoint(&args.model)?;
    let wells = read_wells(&data, allow_missing_pe)?;
    let wells = match args.blind_wells {
        Some(names) => split_by_well(wells, &names)?.1,
        None => wells,
    };
    if let Some(w) = wells.iter().find(|w| !w.is_labeled()) {
        return Err(Error::MissingLabels(format!(
            "well `{}` has no Facies column values",
            w.name
        )));
    }

    let mut predictions = Vec::new();
    for w in &wells {
        predictions.extend(checkpoint.predict(w, allow_missing_pe)?);
    }
    let truth: Vec<u8> = predictions
        .iter()
        .map(|p| p.true_facies.expect("labeled"))
        .collect();
    let predicted: Vec<u8> = predictions.iter().map(|p| p.facies).collect();
    let report = EvalReport::new(&truth, &predicted, &table, checkpoint.train_counts)?;

    let out = args.out.unwrap_or(cfg.output);
    let files = export_plot_data(&report, &predictions, &out)?;
    println!("samples            {}", report.samples);
    println!("accuracy           {:.4}", report.accuracy);
    println!("adjacent accuracy  {:.4}", report.adjacent_accuracy);
    println!("macro F1           {:.4}", report.macro_f1());
    println!("weighted F1        {:.4}", report.weighted_f1());
    if let Some((t, p, n)) = report.confusion.dominant_confusion() {
        println!(
            "dominant confusion {} -> {} ({n})",
            crate::welldata::facies_code(t),
            crate::welldata::facies_code(p)
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(EXIT_OK)
}

pub fn cmd_gradcheck(args: GradcheckArgs) -> Result<i32> {
    let spec = ModelSpec::tiny(args.window);
    spec.validate()?;
    if args.batch == 0 || args.seeds.is_empty() {
        return Err(Error::Config(
            "gradcheck needs a batch >= 1 and at least one seed".into(),
        ));
    }
    let fault = args.inject_fault.clone();
    let tamper = |g: &mut crate::network::ModelParams<f64>| {
        if let Some(prefix) = &fault {
            for (name, t) in g.names.iter().zip(g.tensors.iter_mut()) {
                if name.starts_with(prefix.as_str()) {
                    t.scale(1.01);
                }
            }
        }
    };
    let mut worst: Option<(u64, crate::gradcheck::GradCheckReport)> = None;
    for &seed in &args.seeds {
        let r = check_seed(&spec, seed, args.batch, tamper)?;
        println!(
            "seed {seed}: max relative error {:.3e} at {} ({} parameters)",
            r.max_relative_error, r.worst_param, r.checked
        );
        if worst
            .as_ref()
            .is_none_or(|(_, w)| r.max_relative_error > w.max_relative_error)
        {
            worst = Some((seed, r));
        }
    }
    let (seed, w) = worst.expect("at least one seed");
    if w.passed() {
        println!(
            "PASS: max relative error {:.3e} < {GRADCHECK_TOLERANCE:e}",
            w.max_relative_error
        );
        Ok(EXIT_OK)
    } else {
        println!(
            "FAIL: {} (seed {seed}) analytic {:e} numeric {:e}, relative error {:.3e} >= {GRADCHECK_TOLERANCE:e}",
            w.worst_param, w.analytic, w.numeric, w.max_relative_error
        );
        Ok(EXIT_CHECK_FAILED)
    }
}

pub fn cmd_synth(args: SynthArgs) -> Result<i32> {
    let mut cfg = resolve_config(&args.common)?;
    if let Some(n) = args.wells {
        cfg.synth_wells = n;
    }
    if let Some(n) = args.samples {
        cfg.synth.n_samples = n;
    }
    if let Some(s) = args.sigma {
        cfg.synth.sigma = s;
    }
    if let Some(p) = args.p_stay {
        cfg.synth.p_stay = p;
    }
    cfg.validate()?;
    let wells = generate_wells(&cfg.synth, cfg.synth_wells)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let file = fs::File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_csv(&wells, std::io::BufWriter::new(file))?;
    println!(
        "{} wells x {} samples (seed {}) written to {}",
        wells.len(),
        cfg.synth.n_samples,
        cfg.synth.seed,
        args.out.display()
    );
    Ok(EXIT_OK)
}
