#![no_main]

use libfuzzer_sys::fuzz_target;
use wkde::io::parse_lung_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_lung_csv(text) {
        for r in &records {
            assert!(r.time >= 0.0);
            if let Some(u) = r.ultimate {
                assert!(!r.delta && u >= r.time);
            }
        }
    }
});
