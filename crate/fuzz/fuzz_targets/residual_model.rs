#![no_main]

use libfuzzer_sys::fuzz_target;
use wkde::io::parse_residual_model;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = parse_residual_model(text) {
        if let Ok(r) = model.residuals(&[0.0, 1.0, 10.0]) {
            assert!(r.iter().all(|v| *v >= 0.0));
        }
    }
});
