#![no_main]

use libfuzzer_sys::fuzz_target;
use mapt::io::{format_count_entry, parse_count_entry};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((id, n)) = parse_count_entry(text) {
        assert_eq!(parse_count_entry(&format_count_entry(id, n)).unwrap(), (id, n));
    }
});
