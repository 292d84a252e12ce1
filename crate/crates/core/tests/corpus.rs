//! Replays the checked-in fuzz seeds through the decoders on stable.

use std::fs;
use std::path::PathBuf;

use cpd_core::io::{decode_cpd3, encode_cpd3, parse_factors_json, parse_matrix_json};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

#[test]
fn cpd3_seeds() {
    let mut accepted = 0;
    for (name, bytes) in seeds("cpd3_decode") {
        match decode_cpd3(&bytes) {
            Ok(t) => {
                assert_eq!(encode_cpd3(&t).unwrap(), bytes, "{name}");
                accepted += 1;
            }
            Err(e) => assert!(!e.to_string().is_empty(), "{name}"),
        }
    }
    assert_eq!(accepted, 4);
}

#[test]
fn matrix_json_seeds() {
    let ok: Vec<String> = seeds("matrix_json")
        .into_iter()
        .filter(|(_, b)| parse_matrix_json(&String::from_utf8_lossy(b)).is_ok())
        .map(|(n, _)| n)
        .collect();
    assert_eq!(ok, ["1x1.json", "2x3.json"]);
}

#[test]
fn factors_json_seeds() {
    let ok: Vec<String> = seeds("factors_json")
        .into_iter()
        .filter(|(_, b)| parse_factors_json(&String::from_utf8_lossy(b)).is_ok())
        .map(|(n, _)| n)
        .collect();
    assert_eq!(ok, ["rank1.json", "rank2.json", "rank4_3x3x4.json"]);
}
