#![no_main]

use faciesnet::welldata::{parse_csv_bytes, CsvOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for allow_missing_pe in [false, true] {
        let _ = parse_csv_bytes(data, CsvOptions { allow_missing_pe });
    }
});
