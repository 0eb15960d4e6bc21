#![no_main]

use faciesnet::network::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = Checkpoint::from_bytes(data) {
        // Anything that decodes must re-encode and decode to the same bytes.
        let bytes = ckpt.to_bytes().expect("decoded checkpoint encodes");
        let again = Checkpoint::from_bytes(&bytes).expect("re-encoded checkpoint decodes");
        assert_eq!(again.to_bytes().expect("encodes"), bytes);
    }
});
