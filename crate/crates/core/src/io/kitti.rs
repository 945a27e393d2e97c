//! KITTI disparity PNGs: 16-bit grayscale, disparity = value / 256, 0 = no label.

use std::path::Path;

use thiserror::Error;

use crate::image::DisparityMap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KittiError {
    #[error("not a decodable PNG: {0}")]
    Png(String),
    #[error("disparity PNG must be 16-bit (got {0}-bit)")]
    WrongBitDepth(u8),
    #[error("disparity PNG must be single-channel grayscale")]
    WrongColorType,
}

pub fn decode(bytes: &[u8]) -> Result<DisparityMap, KittiError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| KittiError::Png(e.to_string()))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(KittiError::WrongColorType);
    }
    if info.bit_depth != png::BitDepth::Sixteen {
        return Err(KittiError::WrongBitDepth(info.bit_depth as u8));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| KittiError::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| KittiError::Png(e.to_string()))?;
    let line = frame.line_size;
    let mut values = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * line..y * line + 2 * w];
        for px in row.chunks_exact(2) {
            let raw = u16::from_be_bytes([px[0], px[1]]);
            values.push(f32::from(raw) / 256.0);
            valid.push(raw != 0);
        }
    }
    Ok(DisparityMap::new(w, h, 1, values, valid).expect("decoded buffer is consistent"))
}

/// Rounds to the nearest 1/256 px. Invalid, negative or zero-rounding pixels
/// are stored as 0 (unlabelled); values past the 16-bit range saturate.
pub fn quantize(d: &DisparityMap) -> Vec<u16> {
    d.values()
        .iter()
        .zip(d.valid())
        .map(|(v, ok)| {
            if !*ok || !v.is_finite() || *v < 0.0 {
                0
            } else {
                (f64::from(*v) * 256.0).round().min(65535.0) as u16
            }
        })
        .collect()
}

pub fn encode(d: &DisparityMap) -> Result<Vec<u8>, KittiError> {
    let raw = quantize(d);
    let mut bytes = Vec::with_capacity(raw.len() * 2);
    for v in raw {
        bytes.extend_from_slice(&v.to_be_bytes());
    }
    encode_gray16(d.width() as u32, d.height() as u32, &bytes)
}

/// Big-endian 16-bit grayscale samples to PNG bytes.
pub(crate) fn encode_gray16(width: u32, height: u32, be_samples: &[u8]) -> Result<Vec<u8>, KittiError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Sixteen);
        let mut writer = enc.write_header().map_err(|e| KittiError::Png(e.to_string()))?;
        writer
            .write_image_data(be_samples)
            .map_err(|e| KittiError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn read_kitti_disparity(path: impl AsRef<Path>) -> crate::error::Result<DisparityMap> {
    Ok(decode(&std::fs::read(path)?)?)
}

pub fn write_kitti_disparity(d: &DisparityMap, path: impl AsRef<Path>) -> crate::error::Result<()> {
    std::fs::write(path, encode(d)?)?;
    Ok(())
}
