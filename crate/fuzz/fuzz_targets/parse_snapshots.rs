#![no_main]

use libfuzzer_sys::fuzz_target;
use netcpd::io::{parse_snapshots, write_snapshots};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(snaps) = parse_snapshots(text) {
        // anything accepted must be symmetric, binary, and round-trip
        for s in &snaps {
            let n = s.n();
            for i in 0..n {
                for j in 0..n {
                    assert!(s.entry(i, j) <= 1);
                    assert_eq!(s.entry(i, j), s.entry(j, i));
                }
            }
        }
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &snaps).unwrap();
        let again = parse_snapshots(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(snaps.len(), again.len());
        for (a, b) in snaps.iter().zip(&again) {
            assert_eq!(a.entries(), b.entries());
        }
    }
});
