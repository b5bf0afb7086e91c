//! Fuzz bundle metadata deserialization (serde_json with unknown fields
//! denied).

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = gftbench_harness::bundle::parse_meta(text, "meta.json");
    }
});
