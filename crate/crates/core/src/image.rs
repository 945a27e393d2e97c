//! Raster containers shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// Multi-channel float raster stored as consecutive row-major planes.
///
/// Sample `(c, x, y)` lives at `data[c * width * height + y * width + x]`.
/// Every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl PlanarImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(Error::BufferLength {
                width,
                height,
                channels,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!(value.is_finite());
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Builds a single-channel image from `f(x, y)`. Panics if `f` returns a non-finite value.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                assert!(v.is_finite(), "non-finite sample at ({x}, {y})");
                data.push(v);
            }
        }
        Self {
            width,
            height,
            channels: 1,
            data,
        }
    }

    /// Stacks equally sized single-plane buffers into one image.
    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<f32>>) -> Result<Self> {
        let channels = planes.len();
        let mut data = Vec::with_capacity(width * height * channels);
        for plane in planes {
            if plane.len() != width * height {
                return Err(Error::BufferLength {
                    width,
                    height,
                    channels: 1,
                    actual: plane.len(),
                });
            }
            data.extend(plane);
        }
        Self::new(width, height, channels, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f32 {
        self.data[c * self.plane_len() + y * self.width + x]
    }

    pub fn same_shape(&self, other: &PlanarImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Rec. 601 luminance of an RGB image, or a copy of a grayscale one.
    pub fn luminance(&self) -> Result<PlanarImage> {
        match self.channels {
            1 => Ok(self.clone()),
            3 => {
                let (r, g, b) = (self.plane(0), self.plane(1), self.plane(2));
                let data = r
                    .iter()
                    .zip(g)
                    .zip(b)
                    .map(|((r, g), b)| 0.299 * r + 0.587 * g + 0.114 * b)
                    .collect();
                Ok(PlanarImage {
                    width: self.width,
                    height: self.height,
                    channels: 1,
                    data,
                })
            }
            n => Err(Error::UnsupportedChannels(n)),
        }
    }

    /// Left-right mirror of every plane.
    pub fn mirror_horizontal(&self) -> PlanarImage {
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.width.max(1)) {
            row.reverse();
        }
        out
    }

    /// Top-left `width x height` window.
    pub fn crop(&self, width: usize, height: usize) -> PlanarImage {
        assert!(width <= self.width && height <= self.height);
        let mut data = Vec::with_capacity(width * height * self.channels);
        for c in 0..self.channels {
            let plane = self.plane(c);
            for y in 0..height {
                data.extend_from_slice(&plane[y * self.width..y * self.width + width]);
            }
        }
        PlanarImage {
            width,
            height,
            channels: self.channels,
            data,
        }
    }
}

/// Single-channel disparity in pixels at `1 / scale_den` of the full resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    scale_den: u32,
    values: Vec<f32>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn new(
        width: usize,
        height: usize,
        scale_den: u32,
        values: Vec<f32>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = width * height;
        if values.len() != n || valid.len() != n {
            return Err(Error::BufferLength {
                width,
                height,
                channels: 1,
                actual: values.len().max(valid.len()),
            });
        }
        if scale_den == 0 {
            return Err(Error::InvalidArgument("scale_den must be positive".into()));
        }
        if values.iter().zip(&valid).any(|(v, ok)| *ok && !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            width,
            height,
            scale_den,
            values,
            valid,
        })
    }

    /// All pixels valid.
    pub fn dense(width: usize, height: usize, scale_den: u32, values: Vec<f32>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::new(width, height, scale_den, values, valid)
    }

    pub fn constant(width: usize, height: usize, scale_den: u32, value: f32) -> Self {
        Self::dense(width, height, scale_den, vec![value; width * height])
            .expect("constant disparity must be finite")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn scale_den(&self) -> u32 {
        self.scale_den
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    pub fn same_size(&self, other: &DisparityMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn into_parts(self) -> (Vec<f32>, Vec<bool>) {
        (self.values, self.valid)
    }

    pub fn with_valid(mut self, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != self.values.len() {
            return Err(Error::ShapeMismatch("validity mask size".into()));
        }
        self.valid = valid;
        Ok(self)
    }

    /// Valid pixels only; `None` if the map has none.
    pub fn value_range(&self) -> Option<(f32, f32)> {
        self.values
            .iter()
            .zip(&self.valid)
            .filter(|(_, ok)| **ok)
            .fold(None, |acc, (v, _)| match acc {
                None => Some((*v, *v)),
                Some((lo, hi)) => Some((lo.min(*v), hi.max(*v))),
            })
    }

    pub fn mirror_horizontal(&self) -> DisparityMap {
        let mut out = self.clone();
        for (vals, mask) in out
            .values
            .chunks_mut(self.width.max(1))
            .zip(out.valid.chunks_mut(self.width.max(1)))
        {
            vals.reverse();
            mask.reverse();
        }
        out
    }

    pub fn crop(&self, width: usize, height: usize) -> DisparityMap {
        assert!(width <= self.width && height <= self.height);
        let mut values = Vec::with_capacity(width * height);
        let mut valid = Vec::with_capacity(width * height);
        for y in 0..height {
            let row = y * self.width;
            values.extend_from_slice(&self.values[row..row + width]);
            valid.extend_from_slice(&self.valid[row..row + width]);
        }
        DisparityMap {
            width,
            height,
            scale_den: self.scale_den,
            values,
            valid,
        }
    }

    /// View as a one-channel image; invalid pixels become 0.
    pub fn to_image(&self) -> PlanarImage {
        let data = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(v, ok)| if *ok { *v } else { 0.0 })
            .collect();
        PlanarImage::new(self.width, self.height, 1, data).expect("masked values are finite")
    }
}
