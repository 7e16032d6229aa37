#![no_main]
use libfuzzer_sys::fuzz_target;
use rbfpdm::io::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::parse(text) {
        let _ = config.validate();
        if let Ok(serialized) = config.to_toml() {
            RunConfig::parse(&serialized).expect("serialized config must parse");
        }
    }
});
