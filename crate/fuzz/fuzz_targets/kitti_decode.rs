#![no_main]

use libfuzzer_sys::fuzz_target;
use stereo_core::io::kitti;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = kitti::decode(data) {
        assert!(d.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        let bytes = kitti::encode(&d).unwrap();
        assert_eq!(kitti::decode(&bytes).unwrap(), d);
    }
});
