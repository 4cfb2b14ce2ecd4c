#![no_main]

use libfuzzer_sys::fuzz_target;
use wkde::io::parse_sample_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(csv) = parse_sample_csv(text) {
        let n = csv.x.len();
        assert!(n > 0);
        if let Ok(s) = csv.into_sample() {
            assert_eq!(s.len(), n);
            assert!(s.x().windows(2).all(|w| w[0] <= w[1]));
        }
    }
});
