//! Image decoding into a canonical luminance plane and JPEG re-encoding.
//!
//! Every metric in this crate consumes a [`LumaImage`]: a row-major plane of
//! `f64` luminance samples in the nominal range `[0, 255]`. Grayscale inputs
//! pass through untouched; color inputs are converted with Rec. 601 luma
//! (`0.299 R + 0.587 G + 0.114 B`), the convention of the reference MS-SSIM
//! and NIQE implementations. Luminance stays in floating point from the
//! moment of decode — there is no intermediate 8-bit re-quantization.
//!
//! Supported formats: JPEG, PNG, PGM (binary P5), BMP. EXIF orientation is
//! not handled.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::{codecs::jpeg::JpegEncoder, DynamicImage, ExtendedColorType, ImageError};

use crate::error::{Error, Result};

/// A single-channel floating-point luminance plane.
///
/// Invariants, enforced at construction: `data.len() == width * height`,
/// both dimensions are at least 1, and every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LumaImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidPlane(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidPlane(format!(
                "data length {} != {width}x{height}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPlane(format!("non-finite sample {bad}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Build from a per-pixel closure `(x, y) -> value`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }

    /// Rounded, clamped 8-bit copy of the plane.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

fn map_image_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::Unsupported(_) => Error::UnsupportedFormat(path.to_path_buf()),
        ImageError::IoError(source) => Error::io(path, source),
        other => Error::CorruptBitstream {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Decode-side mapping: the file opened, so an IO error mid-stream means
/// the bitstream ends early.
fn map_decode_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(source) => Error::CorruptBitstream {
            path: path.to_path_buf(),
            detail: source.to_string(),
        },
        other => map_image_error(path, other),
    }
}

/// Decode an image file into a luminance plane.
///
/// Grayscale sources keep their sample values exactly; color sources are
/// reduced with Rec. 601 luma and clamped to `[0, 255]`. Decoding is
/// deterministic: the same file always yields the same plane.
pub fn decode_to_luma(path: impl AsRef<Path>) -> Result<LumaImage> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| map_decode_error(path, e))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::ZeroDimension(path.to_path_buf()));
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(ga) => ga
            .into_raw()
            .chunks_exact(2)
            .map(|px| f64::from(px[0]))
            .collect(),
        other => {
            let rgb = other.into_rgb8();
            rgb.into_raw()
                .chunks_exact(3)
                .map(|px| {
                    let y = 0.299 * f64::from(px[0])
                        + 0.587 * f64::from(px[1])
                        + 0.114 * f64::from(px[2]);
                    y.clamp(0.0, 255.0)
                })
                .collect()
        }
    };
    LumaImage::new(w, h, data)
}

/// Encode a luminance plane as a baseline grayscale JPEG at the libjpeg
/// 1..=100 quality scale. Returns the path written.
pub fn encode_jpeg(img: &LumaImage, quality: u8, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    if quality == 0 || quality > 100 {
        return Err(Error::InvalidQuality(quality));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = JpegEncoder::new_with_quality(BufWriter::new(file), quality);
    encoder
        .encode(
            &img.to_u8(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::L8,
        )
        .map_err(|e| map_image_error(path, e))?;
    Ok(path.to_path_buf())
}

/// Write a luminance plane as an 8-bit grayscale PNG.
///
/// Convenience for materialising references and fabricated corpora; not a
/// metric-path operation.
pub fn save_png(img: &LumaImage, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_u8())
        .expect("dimensions match buffer");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| map_image_error(path, e))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn pgm_grayscale_passthrough() {
        let dir = tmpdir();
        let path = dir.path().join("t.pgm");
        let mut f = File::create(&path).unwrap();
        // binary P5, 2x2, maxval 255
        f.write_all(b"P5\n2 2\n255\n").unwrap();
        f.write_all(&[0u8, 255, 128, 64]).unwrap();
        drop(f);

        let img = decode_to_luma(&path).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 2);
        assert_eq!(img.data(), &[0.0, 255.0, 128.0, 64.0]);
    }

    #[test]
    fn solid_red_png_uses_rec601() {
        let dir = tmpdir();
        let path = dir.path().join("red.png");
        let rgb = image::RgbImage::from_pixel(8, 8, image::Rgb([255, 0, 0]));
        rgb.save(&path).unwrap();

        let img = decode_to_luma(&path).unwrap();
        assert_eq!(img.width(), 8);
        for &v in img.data() {
            assert!((v - 76.245).abs() < 1e-9, "got {v}");
        }
    }

    #[test]
    fn truncated_jpeg_is_corrupt_bitstream() {
        let dir = tmpdir();
        let src = crate::synth::scene(64, 64, 7);
        let full = dir.path().join("full.jpg");
        encode_jpeg(&src, 80, &full).unwrap();
        let bytes = std::fs::read(&full).unwrap();
        let cut = dir.path().join("cut.jpg");
        // cut inside the header; the decoder back-fills truncation that
        // happens later in the scan
        std::fs::write(&cut, &bytes[..24]).unwrap();

        match decode_to_luma(&cut) {
            Err(Error::CorruptBitstream { path, .. }) => assert_eq!(path, cut),
            other => panic!("expected corrupt bitstream, got {other:?}"),
        }
    }

    #[test]
    fn quality_zero_rejected() {
        let img = LumaImage::constant(4, 4, 10.0).unwrap();
        let dir = tmpdir();
        match encode_jpeg(&img, 0, dir.path().join("x.jpg")) {
            Err(Error::InvalidQuality(0)) => {}
            other => panic!("expected invalid quality, got {other:?}"),
        }
    }

    #[test]
    fn jpeg_roundtrip_preserves_dimensions() {
        let dir = tmpdir();
        let src = crate::synth::scene(65, 47, 3);
        for q in [10u8, 55, 100] {
            let path = dir.path().join(format!("q{q}.jpg"));
            encode_jpeg(&src, q, &path).unwrap();
            let back = decode_to_luma(&path).unwrap();
            assert_eq!((back.width(), back.height()), (65, 47));
        }
    }

    #[test]
    fn quality_100_roundtrip_psnr_above_38db() {
        let dir = tmpdir();
        for seed in [1u64, 2, 3] {
            let src = crate::synth::scene(128, 128, seed);
            let path = dir.path().join(format!("s{seed}.jpg"));
            encode_jpeg(&src, 100, &path).unwrap();
            let back = decode_to_luma(&path).unwrap();
            // Source samples are float; quantize like the encoder saw them
            // so the measurement isolates codec loss.
            let quantized =
                LumaImage::new(128, 128, src.to_u8().iter().map(|&v| f64::from(v)).collect())
                    .unwrap();
            let db = crate::fr::psnr(&quantized, &back).unwrap();
            assert!(db > 38.0, "seed {seed}: q=100 roundtrip PSNR {db} dB");
        }
    }

    #[test]
    fn decode_is_deterministic() {
        let dir = tmpdir();
        let src = crate::synth::scene(96, 64, 11);
        let path = dir.path().join("d.jpg");
        encode_jpeg(&src, 60, &path).unwrap();
        let a = decode_to_luma(&path).unwrap();
        let b = decode_to_luma(&path).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn plane_invariants_enforced() {
        assert!(LumaImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(LumaImage::new(0, 2, vec![]).is_err());
        assert!(LumaImage::new(1, 2, vec![0.0, f64::NAN]).is_err());
    }
}
