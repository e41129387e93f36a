#![no_main]

use libfuzzer_sys::fuzz_target;
use qfe_core::optim::Schedule;

fuzz_target!(|bytes: &[u8]| {
    let Ok(text) = std::str::from_utf8(bytes) else {
        return;
    };
    if let Ok(schedule) = text.parse::<Schedule>() {
        let again: Schedule = schedule.to_string().parse().expect("display output parses");
        assert_eq!(again, schedule);
        for epoch in 1..=schedule.last_epoch().min(1000) {
            schedule
                .for_epoch(epoch)
                .expect("every covered epoch has a row");
        }
    }
});
