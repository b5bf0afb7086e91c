//! Fuzz the feature-matrix parser: ragged rows, huge exponents, NaN/inf
//! literals, and junk separators must all come back as errors.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = gftbench_harness::bundle::parse_features(text, "features.csv");
    }
});
