#![no_main]

use feedplan::report::parse_modes;
use feedplan::SchedulerMode;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mode) = text.parse::<SchedulerMode>() {
        assert_eq!(mode.to_string().parse::<SchedulerMode>().unwrap(), mode);
    }
    if let Ok(modes) = parse_modes(text) {
        assert!(!modes.is_empty() && modes.len() <= 6);
    }
});
