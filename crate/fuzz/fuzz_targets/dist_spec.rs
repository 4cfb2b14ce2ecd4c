#![no_main]

use libfuzzer_sys::fuzz_target;
use wkde::TargetDist;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = text.parse::<TargetDist>() {
        for p in [1e-4, 0.5, 0.9999] {
            let q = d.quantile(p);
            let _ = d.pdf(q);
            let _ = d.cdf(q);
        }
    }
});
