#![no_main]
use libfuzzer_sys::fuzz_target;
use viscoflow::scenario::{parse_override, parse_with_overrides};

fuzz_target!(|text: &str| {
    if let Ok((key, value)) = parse_override(text) {
        assert_eq!(key, key.trim());
        assert_eq!(value, value.trim());
    }
    let _ = parse_with_overrides("system = bulk\n", &[text.to_string()]);
});
