#![no_main]
use libfuzzer_sys::fuzz_target;
use rbfpdm::SdfGrid;

// Anything the decoder accepts must survive a second encode/decode pass.
fuzz_target!(|data: &[u8]| {
    if let Ok(grid) = SdfGrid::from_bytes(data) {
        let again = SdfGrid::from_bytes(&grid.to_bytes()).expect("re-encoded grid must decode");
        assert_eq!(again.dims(), grid.dims());
        assert_eq!(again.to_bytes(), grid.to_bytes());
    }
});
