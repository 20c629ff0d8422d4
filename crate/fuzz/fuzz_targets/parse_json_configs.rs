#![no_main]

use libfuzzer_sys::fuzz_target;
use netcpd::detector::DetectorConfig;
use netcpd::generators::ScenarioSpec;
use netcpd::io::{parse_json, ScenarioSidecar};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // deserializers must never panic on arbitrary input; accepted values
    // must survive a serialize/deserialize cycle
    if let Ok(cfg) = parse_json::<DetectorConfig>(text) {
        let round = serde_json::to_string(&cfg).unwrap();
        let back: DetectorConfig = parse_json(&round).unwrap();
        assert_eq!(format!("{cfg:?}"), format!("{back:?}"));
    }
    if let Ok(spec) = parse_json::<ScenarioSpec>(text) {
        let round = serde_json::to_string(&spec).unwrap();
        let back: ScenarioSpec = parse_json(&round).unwrap();
        assert_eq!(spec, back);
    }
    let _ = parse_json::<ScenarioSidecar>(text);
});
