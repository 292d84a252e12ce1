#![no_main]

use cpd_core::io::{decode_cpd3, encode_cpd3};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // anything that decodes must re-encode to the same bytes
    if let Ok(t) = decode_cpd3(data) {
        let again = encode_cpd3(&t).expect("decoded dimensions fit in u32");
        assert_eq!(again, data);
    }
});
