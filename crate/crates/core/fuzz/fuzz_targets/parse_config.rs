#![no_main]
use libfuzzer_sys::fuzz_target;
use viscoflow::scenario::parse_config;

fuzz_target!(|text: &str| {
    if let Ok(cfg) = parse_config(text) {
        let printed = cfg.to_text();
        let again = parse_config(&printed).expect("printed config parses");
        assert_eq!(again.to_text(), printed);
    }
});
