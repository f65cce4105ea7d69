#![no_main]

use libfuzzer_sys::fuzz_target;
use mapt::io::{decode_model, encode_model};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = decode_model(text) {
        let est = &model.estimate;
        let again = decode_model(&encode_model(est, model.tuning)).expect("re-encoded model loads");
        let d = *est.tree().domain();
        let x = 0.5 * (d.lo() + d.hi());
        assert_eq!(
            est.ppd(x).unwrap().to_bits(),
            again.estimate.ppd(x).unwrap().to_bits()
        );
    }
});
