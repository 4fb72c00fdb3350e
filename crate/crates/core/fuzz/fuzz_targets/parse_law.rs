#![no_main]
use libfuzzer_sys::fuzz_target;
use viscoflow::scenario::parse_law;

fuzz_target!(|text: &str| {
    if let Ok(law) = parse_law(text) {
        let printed = law.to_string();
        assert_eq!(parse_law(&printed).unwrap().to_string(), printed);
    }
});
