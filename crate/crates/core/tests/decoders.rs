//! Replays the fuzz corpus seeds plus deterministic mutations of them through
//! the decoders: no panics, and whatever decodes is finite and re-encodable.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereo_core::io::{decode_image, kitti, pfm};

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty());
    files.iter().map(|f| std::fs::read(f).unwrap()).collect()
}

fn mutants(seed: &[u8], rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<u8>> {
    (0..n)
        .map(|_| {
            let mut b = seed.to_vec();
            match rng.random_range(0..4) {
                0 if !b.is_empty() => {
                    let i = rng.random_range(0..b.len());
                    b[i] ^= 1 << rng.random_range(0..8);
                }
                1 if !b.is_empty() => {
                    let i = rng.random_range(0..b.len());
                    b[i] = rng.random();
                }
                2 => b.truncate(rng.random_range(0..=b.len())),
                _ => b.extend((0..rng.random_range(1..16)).map(|_| rng.random::<u8>())),
            }
            b
        })
        .collect()
}

fn run(target: &str, check: impl Fn(&[u8])) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in seeds(target) {
        check(&seed);
        for m in mutants(&seed, &mut rng, 300) {
            check(&m);
        }
    }
}

#[test]
fn pfm_corpus() {
    run("pfm_decode", |data| {
        if let Ok(img) = pfm::decode(data) {
            assert!(img.data().iter().all(|v| v.is_finite()));
            assert_eq!(pfm::decode(&pfm::encode(&img).unwrap()).unwrap(), img);
        }
    });
}

#[test]
fn kitti_corpus() {
    run("kitti_decode", |data| {
        if let Ok(d) = kitti::decode(data) {
            assert!(d.values().iter().all(|v| v.is_finite() && *v >= 0.0));
            assert_eq!(kitti::decode(&kitti::encode(&d).unwrap()).unwrap(), d);
        }
    });
}

#[test]
fn image_corpus() {
    run("image_decode", |data| {
        if let Ok(img) = decode_image(data) {
            assert!(matches!(img.channels(), 1 | 3));
            assert!(img.data().iter().all(|v| v.is_finite()));
        }
    });
}
