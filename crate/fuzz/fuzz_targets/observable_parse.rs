#![no_main]

use libfuzzer_sys::fuzz_target;
use qfe_core::statevector::Observable;

fuzz_target!(|bytes: &[u8]| {
    let Ok(text) = std::str::from_utf8(bytes) else {
        return;
    };
    if let Ok(obs) = text.parse::<Observable>() {
        let shown = obs.to_string();
        let again: Observable = shown.parse().expect("display output parses");
        assert_eq!(again.to_string(), shown);
    }
});
