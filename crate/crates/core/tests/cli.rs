//! End-to-end runs of the `faciesnet` binary.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use faciesnet::welldata::{parse_csv, CsvOptions};

fn run(args: &[&str]) -> Output {
    Command::new(common::binary())
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

const QUICK: &[&str] = &[
    "--set",
    "train.window=9",
    "--set",
    "train.epochs=2",
    "--set",
    "model.stages=1",
    "--set",
    "model.hidden=8",
];

fn synth(dir: &Path, wells: usize, samples: usize) -> String {
    let csv = dir.join("synth.csv").to_string_lossy().into_owned();
    let o = run(&[
        "synth",
        "--out",
        &csv,
        "--wells",
        &wells.to_string(),
        "--samples",
        &samples.to_string(),
        "--seed",
        "5",
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    csv
}

fn train(dir: &Path, csv: &str, out: &str, seed: &str) -> Output {
    let out = dir.join(out).to_string_lossy().into_owned();
    let mut args = vec![
        "train",
        "--data",
        csv,
        "--out",
        &out,
        "--seed",
        seed,
        "--blind-wells",
        "SYN-3",
    ];
    args.extend_from_slice(QUICK);
    run(&args)
}

#[test]
fn synth_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 3, 50);
    let wells = parse_csv(&csv, CsvOptions::default()).unwrap();
    assert_eq!(wells.len(), 3);
    assert!(wells.iter().all(|w| w.len() == 50 && w.is_labeled()));
    let first = fs::read(&csv).unwrap();
    synth(dir.path(), 3, 50);
    assert_eq!(fs::read(&csv).unwrap(), first);
}

#[test]
fn train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path(), 4, 60);
    let o = train(dir.path(), &csv, "run", "7");
    assert_eq!(code(&o), 0, "{}", text(&o));
    let out = text(&o);
    assert!(out.contains("seed = 7") && out.contains("[train]"), "{out}");
    for f in ["model.fnet", "train_report.csv", "train_summary.json"] {
        assert!(dir.path().join("run").join(f).exists(), "{f} missing");
    }

    let again = train(dir.path(), &csv, "run2", "7");
    assert_eq!(code(&again), 0);
    let model = dir.path().join("run/model.fnet");
    assert_eq!(
        fs::read(&model).unwrap(),
        fs::read(dir.path().join("run2/model.fnet")).unwrap()
    );

    let model = model.to_string_lossy().into_owned();
    let pred_dir = dir.path().join("pred").to_string_lossy().into_owned();
    let o = run(&[
        "predict", "--model", &model, "--data", &csv, "--out", &pred_dir,
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let pred_file = dir.path().join("pred/predictions.csv");
    let predictions = fs::read_to_string(&pred_file).unwrap();
    let rows: Vec<&str> = predictions.lines().skip(1).collect();
    assert_eq!(rows.len(), 4 * 60);
    for row in &rows {
        let cells: Vec<&str> = row.split(',').collect();
        let sum: f64 = cells[4..13].iter().map(|c| c.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-6, "{row}");
        assert!(["high", "medium", "low"].contains(&cells[14]));
    }
    run(&[
        "predict", "--model", &model, "--data", &csv, "--out", &pred_dir,
    ]);
    assert_eq!(fs::read_to_string(&pred_file).unwrap(), predictions);

    let eval_dir = dir.path().join("eval").to_string_lossy().into_owned();
    let o = run(&[
        "evaluate",
        "--model",
        &model,
        "--data",
        &csv,
        "--blind-wells",
        "SYN-3",
        "--out",
        &eval_dir,
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    let out = text(&o);
    for key in ["macro F1", "weighted F1", "accuracy", "adjacent accuracy"] {
        assert!(out.contains(key), "{out}");
    }
    for f in [
        "confusion.csv",
        "facies_counts.csv",
        "facies_column.csv",
        "metrics.json",
    ] {
        assert!(dir.path().join("eval").join(f).exists(), "{f} missing");
    }

    let bad_adj = dir.path().join("adj.txt");
    fs::write(&bad_adj, "SS CSiS\n").unwrap();
    let o = run(&[
        "evaluate",
        "--model",
        &model,
        "--data",
        &csv,
        "--adjacency",
        bad_adj.to_str().unwrap(),
        "--out",
        &eval_dir,
    ]);
    assert_eq!(code(&o), 2, "{}", text(&o));

    let unlabeled = dir.path().join("unlabeled.csv");
    let stripped: String = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| l.split_once(',').unwrap().1.to_string() + "\n")
        .collect();
    fs::write(&unlabeled, stripped).unwrap();
    let o = run(&[
        "evaluate",
        "--model",
        &model,
        "--data",
        unlabeled.to_str().unwrap(),
        "--out",
        &eval_dir,
    ]);
    assert_eq!(code(&o), 4, "{}", text(&o));
    let o = run(&[
        "predict",
        "--model",
        &model,
        "--data",
        unlabeled.to_str().unwrap(),
        "--out",
        &pred_dir,
    ]);
    assert_eq!(code(&o), 0, "{}", text(&o));

    let no_gr = dir.path().join("no_gr.csv");
    let dropped: String = fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .map(|l| {
            let mut c: Vec<&str> = l.split(',').collect();
            c.remove(4);
            c.join(",") + "\n"
        })
        .collect();
    fs::write(&no_gr, dropped).unwrap();
    let o = run(&[
        "predict",
        "--model",
        &model,
        "--data",
        no_gr.to_str().unwrap(),
        "--out",
        &pred_dir,
    ]);
    assert_eq!(code(&o), 3, "{}", text(&o));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "train",
        "--data",
        dir.path().join("missing.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(text(&o).contains("missing.csv"));

    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "[train]\nwindow = 4\nmomentum = 2\nbogus = 1\n").unwrap();
    let o = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        "x.csv",
    ]);
    assert_eq!(code(&o), 2);
    let msg = text(&o);
    assert!(msg.contains("bogus"), "{msg}");

    fs::write(&cfg, "[train]\nwindow = 4\nmomentum = 2\n").unwrap();
    let o = run(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--data",
        "x.csv",
    ]);
    let msg = text(&o);
    assert_eq!(code(&o), 2);
    assert!(msg.contains("window") && msg.contains("momentum"), "{msg}");

    assert_eq!(code(&run(&["train", "--bogus-flag"])), 2);
    assert_eq!(code(&run(&["--threads", "0", "gradcheck"])), 2);
}

#[test]
fn gradcheck_passes_and_detects_faults() {
    let o = run(&["gradcheck"]);
    assert_eq!(code(&o), 0, "{}", text(&o));
    assert!(text(&o).contains("PASS"));
    let o = run(&["gradcheck", "--seeds", "0", "--inject-fault", "stage0.b2.w"]);
    assert_eq!(code(&o), 1);
    assert!(text(&o).contains("FAIL: stage0.b2.w["), "{}", text(&o));
}
