//! Fuzz the key=value config parser used for --config files and
//! manifests.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = gftbench_harness::kv::parse_kv(text, "fuzz.cfg");
    }
});
