//! Fuzz the binary checkpoint decoder. Checkpoints may come from other
//! machines or earlier runs; a hostile header must not trigger panics,
//! huge allocations, or integer overflow.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = gftbench_core::checkpoint::decode_checkpoint(data);
});
