//! File formats: PFM, KITTI disparity PNG, input photographs and colour renders.

pub mod colormap;
pub mod kitti;
pub mod pfm;

use std::path::Path;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};
use crate::image::{DisparityMap, PlanarImage};

pub use colormap::render_colormap;
pub use kitti::{read_kitti_disparity, write_kitti_disparity};
pub use pfm::{read_pfm, write_pfm};

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Decodes an 8/16-bit PNG or a PPM/PGM into `[0, 1]` floats: one channel for
/// grayscale input, three otherwise (alpha dropped).
pub fn decode_image(bytes: &[u8]) -> Result<PlanarImage> {
    let img = ImageReader::new(std::io::Cursor::new(bytes))
        .with_guessed_format()?
        .decode()
        .map_err(|e| Error::Decode(e.to_string()))?;
    Ok(from_dynamic(&img))
}

fn from_dynamic(img: &DynamicImage) -> PlanarImage {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        let rgb = img.to_rgb32f();
        let mut planes = (0..3).map(|_| Vec::with_capacity(w * h)).collect::<Vec<_>>();
        for px in rgb.pixels() {
            for c in 0..3 {
                planes[c].push(px.0[c]);
            }
        }
        PlanarImage::from_planes(w, h, planes).expect("decoded pixels are finite")
    } else {
        let luma = img.to_luma32f();
        PlanarImage::new(w, h, 1, luma.into_raw()).expect("decoded pixels are finite")
    }
}

/// Reads an input view: `.pfm` directly, anything else through the image decoders.
pub fn read_image(path: impl AsRef<Path>) -> Result<PlanarImage> {
    let path = path.as_ref();
    if has_ext(path, "pfm") {
        return read_pfm(path);
    }
    decode_image(&std::fs::read(path)?)
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit RGB PNG of a three-channel image in `[0, 1]`.
pub fn write_rgb_png(img: &PlanarImage, path: impl AsRef<Path>) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::UnsupportedChannels(img.channels()));
    }
    let mut buf = Vec::with_capacity(img.plane_len() * 3);
    for i in 0..img.plane_len() {
        for c in 0..3 {
            buf.push(to_u8(img.plane(c)[i]));
        }
    }
    image::save_buffer(
        path,
        &buf,
        img.width() as u32,
        img.height() as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::Decode(e.to_string()))
}

/// 16-bit grayscale PNG of a one-channel image in `[0, 1]`.
pub fn write_gray16_png(img: &PlanarImage, path: impl AsRef<Path>) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::UnsupportedChannels(img.channels()));
    }
    let bytes: Vec<u8> = img
        .plane(0)
        .iter()
        .flat_map(|v| (((v.clamp(0.0, 1.0) * 65535.0).round()) as u16).to_be_bytes())
        .collect();
    let png = kitti::encode_gray16(img.width() as u32, img.height() as u32, &bytes)?;
    std::fs::write(path, png)?;
    Ok(())
}

/// `.pfm` (dense) or KITTI-style `.png` (0 = unlabelled).
pub fn read_disparity(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let path = path.as_ref();
    if has_ext(path, "pfm") {
        pfm::read_pfm_disparity(path)
    } else {
        read_kitti_disparity(path)
    }
}

pub fn write_disparity(d: &DisparityMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if has_ext(path, "pfm") {
        pfm::write_pfm_disparity(d, path)
    } else {
        write_kitti_disparity(d, path)
    }
}
