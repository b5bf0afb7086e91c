//! Fuzz the edge-list parser. Edge files arrive from untrusted graph
//! bundles; the parser must reject malformed lines with an error, never
//! panic or overflow.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = gftbench_harness::bundle::parse_edges(text, "edges.tsv");
    }
});
