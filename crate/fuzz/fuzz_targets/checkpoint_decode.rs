#![no_main]

use libfuzzer_sys::fuzz_target;
use qfe_core::trainer::Checkpoint;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(ckpt) = Checkpoint::decode(bytes) {
        // the format has one encoding per value
        assert_eq!(ckpt.encode(), bytes);
    }
});
