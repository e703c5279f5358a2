#![no_main]

use libfuzzer_sys::fuzz_target;
use microworld::engine::load_scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = load_scenario(text) {
        // anything accepted must survive a round trip
        let again = load_scenario(&config.to_json()).expect("re-load of serialized scenario");
        assert_eq!(config, again);
    }
});
