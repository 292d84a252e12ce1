#![no_main]

use cpd_core::io::{factors_to_json, parse_factors_json};
use cpd_core::linalg::Mat;
use libfuzzer_sys::fuzz_target;

fn close(x: &Mat, y: &Mat) -> bool {
    x.shape() == y.shape()
        && x.iter()
            .zip(y.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-15 * a.abs().max(b.abs()))
}

fuzz_target!(|data: &str| {
    let Ok(f) = parse_factors_json(data) else {
        return;
    };
    assert_eq!(f.a.ncols(), f.b.ncols());
    assert_eq!(f.a.ncols(), f.c.ncols());
    let back = parse_factors_json(&factors_to_json(&f)).expect("own output parses");
    assert!(close(&back.a, &f.a) && close(&back.b, &f.b) && close(&back.c, &f.c));
});
