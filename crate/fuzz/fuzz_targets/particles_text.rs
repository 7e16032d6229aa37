#![no_main]
use libfuzzer_sys::fuzz_target;
use rbfpdm::io::{format_particles, parse_particles};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ps) = parse_particles(text, 0) {
        let back = parse_particles(&format_particles(&ps), 0).expect("formatted particles must parse");
        assert_eq!(back, ps);
    }
});
