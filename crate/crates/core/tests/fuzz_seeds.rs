//! Replays the checked-in fuzz corpus through each decoder on stable, so a
//! seed that panics is caught without cargo-fuzz.

use std::fs;
use std::path::PathBuf;

use faciesnet::config::RunConfig;
use faciesnet::evaluation::parse_confusion_csv;
use faciesnet::network::Checkpoint;
use faciesnet::welldata::{parse_csv_bytes, CsvOptions, FaciesTable, Standardizer};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn csv_seeds() {
    let mut ok = 0;
    for (_, bytes) in seeds("parse_csv") {
        for allow_missing_pe in [false, true] {
            ok += parse_csv_bytes(&bytes, CsvOptions { allow_missing_pe }).is_ok() as usize;
        }
    }
    assert!(ok > 0);
}

#[test]
fn checkpoint_seeds() {
    for (path, bytes) in seeds("load_checkpoint") {
        let decoded = Checkpoint::from_bytes(&bytes);
        if path.ends_with("tiny.fnet") {
            assert_eq!(decoded.unwrap().to_bytes().unwrap(), bytes);
        }
    }
}

#[test]
fn config_seeds() {
    for (path, bytes) in seeds("parse_config") {
        let parsed = RunConfig::parse(std::str::from_utf8(&bytes).unwrap());
        assert_eq!(
            parsed.is_ok(),
            !path.ends_with("errors.conf"),
            "{}",
            path.display()
        );
    }
}

#[test]
fn adjacency_seeds() {
    for (path, bytes) in seeds("parse_adjacency") {
        if let Ok(table) = FaciesTable::parse(std::str::from_utf8(&bytes).unwrap()) {
            assert_eq!(
                FaciesTable::parse(&table.to_text()).unwrap(),
                table,
                "{}",
                path.display()
            );
        }
    }
}

#[test]
fn standardizer_seeds() {
    for (path, bytes) in seeds("parse_standardizer") {
        let parsed = Standardizer::parse(std::str::from_utf8(&bytes).unwrap());
        assert_eq!(
            parsed.is_ok(),
            path.ends_with("trained.txt"),
            "{}",
            path.display()
        );
    }
}

#[test]
fn confusion_seeds() {
    for (path, bytes) in seeds("parse_confusion") {
        let parsed = parse_confusion_csv(std::str::from_utf8(&bytes).unwrap());
        assert_eq!(
            parsed.is_ok(),
            path.ends_with("evaluated.csv"),
            "{}",
            path.display()
        );
    }
}
