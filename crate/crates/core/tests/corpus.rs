//! Fuzz corpus seeds parse cleanly, and hostile inputs fail without panicking.

use std::fs;
use std::path::Path;

use switchstab::io;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn every_seed_parses() {
    for (name, text) in seeds("parse_family") {
        io::parse_family(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("parse_certificates") {
        io::parse_certificates(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for target in ["parse_signal", "signal_stats"] {
        for (name, text) in seeds(target) {
            io::parse_signal(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
    for (name, text) in seeds("parse_generator_spec") {
        io::parse_generator_spec(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("read_csv_table") {
        io::read_csv_table(text.as_bytes()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn hostile_families_are_rejected() {
    let huge_dim = r#"{"dimension": 4294967297, "subsystems": [{"id": 1, "class": "stable", "matrix": [1.0]}]}"#;
    assert!(io::parse_family(huge_dim).is_err());
    let extreme = r#"{"dimension": 2, "subsystems": [
        {"id": 1, "class": "stable", "matrix": [[1e308, -1e308], [1e308, 1e308]]}]}"#;
    assert!(io::parse_family(extreme).is_err());
    for text in ["", "[]", "{", "null", r#"{"dimension": -1}"#] {
        assert!(io::parse_family(text).is_err(), "{text:?}");
    }
}

#[test]
fn hostile_signals_are_rejected() {
    for text in [
        r#"{"taus": [0], "horizon": 1.0}"#,
        r#"{"taus": [0], "modes": [1], "horizon": -1.0}"#,
        r#"{"taus": [0], "modes": [0], "horizon": 1.0}"#,
        r#"{"taus": [0, 2], "modes": [1, 2], "horizon": 1.0}"#,
        r#"{"taus": [0, 0.5, 0.5], "modes": [1, 2, 1], "horizon": 1.0}"#,
    ] {
        assert!(io::parse_signal(text).is_err(), "{text:?}");
    }
}
