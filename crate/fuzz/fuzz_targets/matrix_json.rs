#![no_main]

use cpd_core::io::{parse_matrix_json, FactorMatrixJson};
use cpd_core::linalg::Mat;
use libfuzzer_sys::fuzz_target;

fn close(x: &Mat, y: &Mat) -> bool {
    x.shape() == y.shape()
        && x.iter()
            .zip(y.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-15 * a.abs().max(b.abs()))
}

fuzz_target!(|data: &str| {
    if let Ok(m) = parse_matrix_json(data) {
        let text = serde_json::to_string(&FactorMatrixJson::from(&m)).unwrap();
        assert!(close(&parse_matrix_json(&text).unwrap(), &m));
    }
});
