#![no_main]

use libfuzzer_sys::fuzz_target;
use wkde::lung::LungMode;
use wkde::simulate::Scenario;
use wkde::{Kernel, Selector};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = text.parse::<Kernel>();
    let _ = text.parse::<Selector>();
    let _ = text.parse::<LungMode>();
    let _ = text.parse::<Scenario>();
});
