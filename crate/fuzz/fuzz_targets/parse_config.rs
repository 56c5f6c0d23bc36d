#![no_main]

use libfuzzer_sys::fuzz_target;
use noncollide_cli::parse_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = parse_config(text) else {
        return;
    };
    // Anything accepted must survive a round trip unchanged.
    if let Ok(serialized) = config.to_toml() {
        let reparsed = parse_config(&serialized).expect("serialized config parses");
        assert_eq!(config, reparsed);
    }
});
