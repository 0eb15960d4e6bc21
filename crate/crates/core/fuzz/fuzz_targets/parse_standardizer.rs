#![no_main]

use faciesnet::welldata::Standardizer;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = Standardizer::parse(text);
    }
});
