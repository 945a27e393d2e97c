#![no_main]

use libfuzzer_sys::fuzz_target;
use stereo_core::io::pfm;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = pfm::decode(data) {
        assert!(img.data().iter().all(|v| v.is_finite()));
        assert_eq!(img.data().len(), img.width() * img.height() * img.channels());
        // anything the reader accepts must survive a write/read cycle
        let bytes = pfm::encode(&img).unwrap();
        assert_eq!(pfm::decode(&bytes).unwrap(), img);
    }
});
