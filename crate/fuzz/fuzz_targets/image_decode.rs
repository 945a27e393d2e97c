#![no_main]

use libfuzzer_sys::fuzz_target;
use stereo_core::io::decode_image;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_image(data) {
        assert!(matches!(img.channels(), 1 | 3));
        assert!(img.data().iter().all(|v| v.is_finite()));
    }
});
