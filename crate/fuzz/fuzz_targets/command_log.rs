#![no_main]

use libfuzzer_sys::fuzz_target;
use microworld::engine::log::{parse_log, write_log, LogHeader};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(log) = parse_log(text) else { return };
    let Some(header) = &log.header else { return };
    let mut out = Vec::new();
    write_log(&mut out, &LogHeader::new(header.scenario.clone()), &log.entries).unwrap();
    let again = parse_log(std::str::from_utf8(&out).unwrap()).expect("re-parse of written log");
    assert_eq!(again.entries, log.entries);
});
