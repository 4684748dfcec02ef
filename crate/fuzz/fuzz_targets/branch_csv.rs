#![no_main]

use libfuzzer_sys::fuzz_target;
use mems_fold::export::{read_branch_csv, write_branch_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_branch_csv(data) {
        // anything accepted must survive a write/read round trip
        let mut buf = Vec::new();
        write_branch_csv(&mut buf, &rows).unwrap();
        let again = read_branch_csv(&buf[..]).unwrap();
        assert_eq!(again.len(), rows.len());
    }
});
