#![no_main]

use libfuzzer_sys::fuzz_target;
use wkde::distributions::parse_biasing;
use wkde::TargetDist;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let dist = TargetDist::Weibull { shape: 2.0, scale: 1.0 };
    for d in [None, Some(&dist)] {
        if let Ok(b) = parse_biasing(text, d) {
            for x in [0.0, 0.5, 1.0, 3.0] {
                let p = b.eval(x);
                assert!((0.0..=1.0).contains(&p), "{p}");
            }
        }
    }
});
