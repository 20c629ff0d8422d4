#![no_main]

use libfuzzer_sys::fuzz_target;
use netcpd::harness::{read_records_csv, write_records_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records_csv(data) {
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &records).unwrap();
        let again = read_records_csv(buf.as_slice()).unwrap();
        assert_eq!(records, again);
    }
});
