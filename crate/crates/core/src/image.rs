//! RGB images with channels in `[0, 1]`.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major RGB image with real channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<[f64; 3]>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!("image must be non-empty, got {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| p.iter().any(|c| !c.is_finite() || *c < 0.0 || *c > 1.0)) {
            return Err(Error::invalid(format!("channel values must lie in [0,1], found {p:?}")));
        }
        Ok(ImageBuffer { width, height, pixels })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Self {
        let pixels = img
            .pixels()
            .map(|p| [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0])
            .collect();
        ImageBuffer { width: img.width() as usize, height: img.height() as usize, pixels }
    }

    /// Loads an 8-bit PNG or PPM file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        let mut out = image::RgbImage::new(self.width as u32, self.height as u32);
        for (dst, src) in out.pixels_mut().zip(&self.pixels) {
            *dst = image::Rgb(src.map(|c| (c * 255.0).round().clamp(0.0, 255.0) as u8));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_rgb8().save(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    /// Luma with Rec. 601 weights.
    pub fn gray(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| gray_of(p)).collect()
    }
}

#[inline]
pub fn gray_of(p: [f64; 3]) -> f64 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(ImageBuffer::new(1, 1, vec![[0.0, 1.5, 0.0]]).is_err());
        assert!(ImageBuffer::new(1, 1, vec![[f64::NAN, 0.0, 0.0]]).is_err());
        assert!(ImageBuffer::new(2, 1, vec![[0.0; 3]]).is_err());
        assert!(ImageBuffer::new(0, 0, vec![]).is_err());
    }

    #[test]
    fn rgb8_roundtrip() {
        let img = ImageBuffer::from_fn(3, 2, |x, y| [x as f64 / 2.0, y as f64, 0.2]).unwrap();
        let back = ImageBuffer::from_rgb8(&img.to_rgb8());
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }
}
