#![no_main]

use libfuzzer_sys::fuzz_target;
use qfe_core::data::decode_idx;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(array) = decode_idx(bytes) {
        assert_eq!(array.dims.iter().product::<usize>(), array.data.len());
    }
});
