#![no_main]

use libfuzzer_sys::fuzz_target;
use mems_fold::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = RunConfig::parse(text) {
            assert!(c.atol > 0.0 && c.rtol > 0.0 && c.h0 <= c.h_max);
        }
    }
});
