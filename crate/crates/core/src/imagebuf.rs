//! Planar channel-major image buffer with f64 pixels.
//!
//! Frames, active images, and augmentation all operate on this container;
//! pixel values conventionally live in [0, 255] for display-ready images
//! but may be signed and unbounded for intermediate difference images.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Image {
        assert!(channels >= 1 && height >= 1 && width >= 1);
        Image { channels, height, width, data: vec![0.0; channels * height * width] }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Image> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Argument(format!(
                "image dimensions must be >= 1, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::dimension(format!(
                "pixel count {} does not match {}x{}x{}",
                data.len(),
                channels,
                height,
                width
            )));
        }
        Ok(Image { channels, height, width, data })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.height * self.width..(c + 1) * self.height * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Luma-weighted grayscale reduction (0.299 R + 0.587 G + 0.114 B).
    /// Single-channel images pass through unchanged.
    pub fn to_grayscale(&self) -> Result<Image> {
        match self.channels {
            1 => Ok(self.clone()),
            3 => {
                let hw = self.height * self.width;
                let (r, g, b) = (&self.data[..hw], &self.data[hw..2 * hw], &self.data[2 * hw..]);
                let data = (0..hw)
                    .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
                    .collect();
                Image::from_vec(1, self.height, self.width, data)
            }
            c => Err(Error::Argument(format!(
                "grayscale conversion expects 1 or 3 channels, got {c}"
            ))),
        }
    }

    /// CHW tensor view of the pixels.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(&[self.channels, self.height, self.width], self.data.clone())
            .expect("image dimensions are validated at construction")
    }
}
