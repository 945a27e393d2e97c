//! Portable float map (PFM) decoding and encoding.
//!
//! Layout: `Pf` (one channel) or `PF` (three, interleaved), `width height`,
//! a scale whose sign gives the byte order (negative = little endian), then
//! raw `f32` rows from the bottom of the image to the top.
//!
//! The encoder always writes little endian with the header
//! `"{Pf|PF}\n{w} {h}\n-1.000000\n"`; files in that form round-trip byte for byte.

use std::path::Path;

use thiserror::Error;

use crate::image::{DisparityMap, PlanarImage};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PfmError {
    #[error("not a PFM file (magic must be `Pf` or `PF`)")]
    BadMagic,
    #[error("malformed PFM header: {0}")]
    BadHeader(&'static str),
    #[error("PFM scale must be a finite non-zero number")]
    BadScale,
    #[error("PFM payload truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("PFM payload contains non-finite values")]
    NonFinite,
}

/// Splits off the next whitespace-delimited token and the byte that ended it.
fn next_token(buf: &[u8], pos: &mut usize) -> Result<(usize, usize), PfmError> {
    while *pos < buf.len() && buf[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < buf.len() && !buf[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(PfmError::BadHeader("unexpected end of header"));
    }
    Ok((start, *pos))
}

fn parse<T: std::str::FromStr>(buf: &[u8], range: (usize, usize), what: &'static str) -> Result<T, PfmError> {
    std::str::from_utf8(&buf[range.0..range.1])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(PfmError::BadHeader(what))
}

pub fn decode(buf: &[u8]) -> Result<PlanarImage, PfmError> {
    let mut pos = 0;
    let magic = next_token(buf, &mut pos).map_err(|_| PfmError::BadMagic)?;
    let channels = match &buf[magic.0..magic.1] {
        b"Pf" => 1,
        b"PF" => 3,
        _ => return Err(PfmError::BadMagic),
    };
    let width: usize = parse(buf, next_token(buf, &mut pos)?, "width")?;
    let height: usize = parse(buf, next_token(buf, &mut pos)?, "height")?;
    if width == 0 || height == 0 {
        return Err(PfmError::BadHeader("zero dimension"));
    }
    let scale: f32 = parse(buf, next_token(buf, &mut pos)?, "scale")?;
    if !scale.is_finite() || scale == 0.0 {
        return Err(PfmError::BadScale);
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= buf.len() {
        return Err(PfmError::BadHeader("missing payload separator"));
    }
    pos += 1;
    let little = scale < 0.0;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .and_then(|n| n.checked_mul(4))
        .ok_or(PfmError::BadHeader("dimensions overflow"))?;
    let payload = &buf[pos..];
    if payload.len() < expected {
        return Err(PfmError::Truncated {
            expected,
            actual: payload.len(),
        });
    }

    let plane = width * height;
    let mut data = vec![0.0f32; plane * channels];
    for (i, chunk) in payload[..expected].chunks_exact(4).enumerate() {
        let bytes = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        if !v.is_finite() {
            return Err(PfmError::NonFinite);
        }
        let c = i % channels;
        let px = i / channels;
        let (x, file_row) = (px % width, px / width);
        let y = height - 1 - file_row;
        data[c * plane + y * width + x] = v;
    }
    Ok(PlanarImage::new(width, height, channels, data).expect("decoded buffer is consistent"))
}

/// One- or three-channel images only.
pub fn encode(img: &PlanarImage) -> Result<Vec<u8>, crate::error::Error> {
    let magic = match img.channels() {
        1 => "Pf",
        3 => "PF",
        n => return Err(crate::error::Error::UnsupportedChannels(n)),
    };
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let header = format!("{magic}\n{w} {h}\n-1.000000\n");
    let mut out = Vec::with_capacity(header.len() + w * h * c * 4);
    out.extend_from_slice(header.as_bytes());
    for y in (0..h).rev() {
        for x in 0..w {
            for ch in 0..c {
                out.extend_from_slice(&img.get(ch, x, y).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn read_pfm(path: impl AsRef<Path>) -> crate::error::Result<PlanarImage> {
    Ok(decode(&std::fs::read(path)?)?)
}

pub fn write_pfm(img: &PlanarImage, path: impl AsRef<Path>) -> crate::error::Result<()> {
    std::fs::write(path, encode(img)?)?;
    Ok(())
}

/// Dense full-resolution disparity from a one-channel PFM.
pub fn read_pfm_disparity(path: impl AsRef<Path>) -> crate::error::Result<DisparityMap> {
    let img = read_pfm(path)?;
    if img.channels() != 1 {
        return Err(crate::error::Error::UnsupportedChannels(img.channels()));
    }
    let (w, h) = (img.width(), img.height());
    DisparityMap::dense(w, h, 1, img.into_data())
}

/// Invalid pixels are written as 0.
pub fn write_pfm_disparity(d: &DisparityMap, path: impl AsRef<Path>) -> crate::error::Result<()> {
    write_pfm(&d.to_image(), path)
}
