#![no_main]

use libfuzzer_sys::fuzz_target;
use netcpd::io::parse_edge_list;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(snaps) = parse_edge_list(text) {
        for s in &snaps {
            let n = s.n();
            for i in 0..n {
                assert_eq!(s.entry(i, i), 0, "self-loop slipped through");
                for j in 0..n {
                    assert!(s.entry(i, j) <= 1);
                    assert_eq!(s.entry(i, j), s.entry(j, i));
                }
            }
        }
    }
});
