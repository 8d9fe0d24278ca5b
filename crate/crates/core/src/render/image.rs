use std::io::BufWriter;
use std::path::Path;

use crate::color::RGBColor;
use crate::error::{Error, Result};

/// Row-major RGB raster, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRGB {
    width: usize,
    height: usize,
    pixels: Vec<RGBColor>,
}

impl ImageRGB {
    pub fn new(width: usize, height: usize, pixels: Vec<RGBColor>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(ImageRGB { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, c: RGBColor) -> Self {
        ImageRGB {
            width,
            height,
            pixels: vec![c; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[RGBColor] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [RGBColor] {
        &mut self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> RGBColor {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, c: RGBColor) {
        self.pixels[row * self.width + col] = c;
    }

    /// Quantizes to 8 bits per channel and back, as a PNG round-trip would.
    pub fn quantized(&self) -> ImageRGB {
        ImageRGB {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|p| RGBColor::from_u8(p.to_u8())).collect(),
        }
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.to_u8()).collect()
    }

    /// Copies `src` into this image with its top-left corner at (`col`, `row`), clipped.
    pub fn blit(&mut self, src: &ImageRGB, col: usize, row: usize) {
        for r in 0..src.height {
            for c in 0..src.width {
                let (x, y) = (col + c, row + r);
                if x < self.width && y < self.height {
                    self.set(x, y, src.get(c, r));
                }
            }
        }
    }

    /// Nearest-neighbor resize.
    pub fn resized(&self, width: usize, height: usize) -> ImageRGB {
        let mut out = ImageRGB::filled(width, height, RGBColor::BLACK);
        for r in 0..height {
            let sr = (r * self.height / height.max(1)).min(self.height - 1);
            for c in 0..width {
                let sc = (c * self.width / width.max(1)).min(self.width - 1);
                out.set(c, r, self.get(sc, sr));
            }
        }
        out
    }

    pub fn write_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut enc = png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header()?;
        w.write_image_data(&self.to_rgb8())?;
        w.finish()?;
        Ok(())
    }

    pub fn read_png(path: impl AsRef<Path>) -> Result<ImageRGB> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
        decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
        let mut reader = decoder.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
        let info = reader.next_frame(&mut buf)?;
        let (w, h) = (info.width as usize, info.height as usize);
        let channels = match info.color_type {
            png::ColorType::Rgb => 3,
            png::ColorType::Rgba => 4,
            png::ColorType::Grayscale => 1,
            png::ColorType::GrayscaleAlpha => 2,
            other => return Err(Error::malformed(path, format!("unsupported color type {other:?}"))),
        };
        let data = &buf[..info.buffer_size()];
        let pixels = data
            .chunks_exact(channels)
            .map(|px| match channels {
                1 | 2 => RGBColor::from_u8([px[0]; 3]),
                _ => RGBColor::from_u8([px[0], px[1], px[2]]),
            })
            .collect();
        ImageRGB::new(w, h, pixels)
    }
}
