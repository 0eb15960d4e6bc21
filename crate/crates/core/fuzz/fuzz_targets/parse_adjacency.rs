#![no_main]

use faciesnet::welldata::FaciesTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = FaciesTable::parse(text) {
            assert_eq!(FaciesTable::parse(&table.to_text()).expect("round trip"), table);
        }
    }
});
