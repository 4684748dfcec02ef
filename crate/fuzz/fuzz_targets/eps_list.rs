#![no_main]

use libfuzzer_sys::fuzz_target;
use mems_fold::config::parse_list;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = parse_list(text) {
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
});
