use std::fs;
use std::path::PathBuf;

use selftest_cli::canonical;
use selftest_cli::corpus::corpus;
use selftest_cli::io::{parse, parse_model, CorrelationFile, ModelFile};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Set `SELFTEST_REGENERATE=1` to rewrite the shipped files.
#[test]
fn shipped_fixtures_match_generator() {
    let regenerate = std::env::var("SELFTEST_REGENERATE").is_ok_and(|v| v == "1");
    for (name, contents) in corpus() {
        let path = fixture_dir().join(name);
        if regenerate {
            fs::write(&path, &contents).expect("fixture dir is writable");
        }
        let on_disk = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(on_disk, contents, "{name} is stale; rerun with SELFTEST_REGENERATE=1");
    }
}

#[test]
fn every_fixture_round_trips_byte_for_byte() {
    for (name, contents) in corpus() {
        let again = if name.ends_with(".model.json") {
            let m = parse_model(&contents, name).unwrap();
            canonical::to_string(&ModelFile::from_model(&m)).unwrap()
        } else if name.ends_with(".corr.json") {
            let p = parse::<CorrelationFile>(&contents, name)
                .unwrap()
                .into_correlation(name)
                .unwrap();
            canonical::to_string(&CorrelationFile::from_correlation(&p)).unwrap()
        } else {
            let v: serde_json::Value = serde_json::from_str(&contents).unwrap();
            canonical::to_string(&v).unwrap()
        };
        assert_eq!(again, contents, "{name}");
    }
}

#[test]
fn generator_is_deterministic() {
    assert_eq!(corpus(), corpus());
}
