#![no_main]

use libfuzzer_sys::fuzz_target;
use mapt::io::{format_f64, parse_data};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(xs) = parse_data(text) {
        assert!(xs.iter().all(|x| x.is_finite()));
        let again: String = xs.iter().map(|x| format_f64(*x) + "\n").collect();
        assert_eq!(parse_data(&again).unwrap(), xs);
    }
});
