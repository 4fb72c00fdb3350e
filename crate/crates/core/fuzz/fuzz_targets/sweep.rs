#![no_main]
use libfuzzer_sys::fuzz_target;
use viscoflow::stability::SweepSpec;

fuzz_target!(|text: &str| {
    if let Ok(s) = SweepSpec::parse(text) {
        assert_eq!(SweepSpec::parse(&s.to_string()).unwrap(), s);
        if s.count <= 4096 {
            let ks = s.wavenumbers();
            assert_eq!(ks.len(), s.count);
            assert!(ks.iter().all(|k| *k >= s.k_min && *k <= s.k_max));
        }
    }
});
