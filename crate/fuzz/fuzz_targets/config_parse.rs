#![no_main]

use libfuzzer_sys::fuzz_target;
use qfe_core::trainer::ConfigBuilder;

fuzz_target!(|bytes: &[u8]| {
    let Ok(text) = std::str::from_utf8(bytes) else {
        return;
    };
    let Ok(config) = ConfigBuilder::parse(text).and_then(|b| b.resolve()) else {
        return;
    };
    // the canonical text must resolve back to the same run
    let canonical = config.to_text();
    let again = ConfigBuilder::parse(&canonical)
        .and_then(|b| b.resolve())
        .expect("canonical text resolves");
    assert_eq!(again.to_text(), canonical);
});
