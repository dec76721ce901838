//! Pixel containers shared by every stage of the pipeline, plus their PNG
//! and planar-float encodings.

use std::io::{Read, Write};
use std::path::Path;

use image::{GrayImage, ImageBuffer, Luma, Rgb, RgbImage};

use crate::error::{Error, Result};

/// Label value used for pixels that belong to no color class.
pub const BACKGROUND: u8 = 255;

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height * 3 {
            return Err(Error::InvalidRaster(format!(
                "expected {} bytes for {width}x{height}, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self::new(width, height, data)
    }

    /// Builds a `n x 1` strip from a list of pixels.
    pub fn from_pixels(pixels: &[[u8; 3]]) -> Result<Self> {
        let data = pixels.iter().flatten().copied().collect();
        Self::new(pixels.len(), 1, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> [u8; 3] {
        let o = index * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn pixel_at(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixel(y * self.width + x)
    }

    pub fn set_pixel(&mut self, index: usize, rgb: [u8; 3]) {
        let o = index * 3;
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf: RgbImage = ImageBuffer::<Rgb<u8>, _>::from_raw(
            self.width as u32,
            self.height as u32,
            self.data.clone(),
        )
        .expect("raster length checked at construction");
        buf.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Floating-point RGB in `[0, 1]`, either `value / 255` or the per-pixel
/// channel ratios produced by [`crate::colorspace::normalize_pixelwise`].
#[derive(Debug, Clone, PartialEq)]
pub struct FloatRaster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[f64; 3]>,
    /// True when the values are pixel-wise normalized ratios.
    pub normalized: bool,
}

impl FloatRaster {
    pub fn from_raster(img: &RasterImage) -> Self {
        let data = img
            .pixels()
            .map(|p| {
                [
                    p[0] as f64 / 255.0,
                    p[1] as f64 / 255.0,
                    p[2] as f64 / 255.0,
                ]
            })
            .collect();
        Self {
            width: img.width(),
            height: img.height(),
            data,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Per-pixel class index (`0..12`) or [`BACKGROUND`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "label map {width}x{height} has {} entries",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, label: u8) -> Self {
        Self {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Sorted distinct non-background classes.
    pub fn classes(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (0..BACKGROUND).filter(|&c| seen[c as usize]).collect()
    }

    pub fn count(&self, class: u8) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .to_luma8();
        let (w, h) = img.dimensions();
        Self::new(w as usize, h as usize, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        save_gray(path, self.width, self.height, self.labels.clone())
    }
}

pub(crate) fn save_gray(path: &Path, width: usize, height: usize, data: Vec<u8>) -> Result<()> {
    let buf: GrayImage = ImageBuffer::<Luma<u8>, _>::from_raw(width as u32, height as u32, data)
        .ok_or_else(|| {
            Error::InvalidRaster(format!("gray buffer does not match {width}x{height}"))
        })?;
    buf.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub const PLANAR_MAGIC: [u8; 4] = *b"CPPL";

/// Writes planes as little-endian `f32` after a 16-byte header
/// (magic, width, height, channel count; each a `u32` LE except the magic).
pub fn write_planar<W: Write>(
    mut out: W,
    width: usize,
    height: usize,
    planes: &[Vec<f64>],
) -> std::io::Result<()> {
    out.write_all(&PLANAR_MAGIC)?;
    out.write_all(&(width as u32).to_le_bytes())?;
    out.write_all(&(height as u32).to_le_bytes())?;
    out.write_all(&(planes.len() as u32).to_le_bytes())?;
    for plane in planes {
        for &v in plane {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Inverse of [`write_planar`]; returns `(width, height, planes)`.
pub fn read_planar<R: Read>(mut input: R) -> std::io::Result<(usize, usize, Vec<Vec<f32>>)> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[..4] != PLANAR_MAGIC {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "bad planar magic",
        ));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let (width, height, channels) = (word(4), word(8), word(12));
    let mut planes = Vec::with_capacity(channels);
    let mut buf = [0u8; 4];
    for _ in 0..channels {
        let mut plane = Vec::with_capacity(width * height);
        for _ in 0..width * height {
            input.read_exact(&mut buf)?;
            plane.push(f32::from_le_bytes(buf));
        }
        planes.push(plane);
    }
    Ok((width, height, planes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_lengths() {
        assert!(RasterImage::new(2, 2, vec![0; 11]).is_err());
        assert!(RasterImage::new(0, 2, vec![]).is_err());
        assert!(LabelMap::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn classes_skip_background() {
        let m = LabelMap::new(2, 2, vec![3, BACKGROUND, 0, 3]).unwrap();
        assert_eq!(m.classes(), vec![0, 3]);
        assert_eq!(m.count(3), 2);
    }

    #[test]
    fn planar_header_layout() {
        let mut buf = Vec::new();
        write_planar(
            &mut buf,
            2,
            1,
            &[vec![1.0, 2.0], vec![0.5, -1.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(buf.len(), 16 + 3 * 2 * 4);
        assert_eq!(&buf[..4], b"CPPL");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 3);
        let (w, h, planes) = read_planar(&buf[..]).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(planes[1], vec![0.5, -1.0]);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::new(2, 1, vec![1, 2, 3, 250, 251, 252]).unwrap();
        let path = dir.path().join("a.png");
        img.save_png(&path).unwrap();
        assert_eq!(RasterImage::load_png(&path).unwrap(), img);
        let labels = LabelMap::new(2, 1, vec![4, BACKGROUND]).unwrap();
        let lpath = dir.path().join("l.png");
        labels.save_png(&lpath).unwrap();
        assert_eq!(LabelMap::load_png(&lpath).unwrap(), labels);
    }
}
