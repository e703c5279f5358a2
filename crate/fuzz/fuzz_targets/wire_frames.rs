#![no_main]

use libfuzzer_sys::fuzz_target;
use microworld_session::protocol::{decode_client, decode_server, encode};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(msg) = decode_client(text) {
        assert_eq!(decode_client(&encode(&msg)).unwrap(), msg);
    }
    let _ = decode_server(text);
});
