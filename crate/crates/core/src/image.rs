//! Single-channel images and binary PGM (P5) I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Side length of an eye crop fed to the blink detector.
pub const CROP_SIZE: usize = 50;

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// An all-black image.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::ValidationFailure(format!(
                "pixel intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Mirror image about the vertical axis.
    pub fn flipped_horizontal(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for row in self.pixels.chunks(self.width.max(1)) {
            pixels.extend(row.iter().rev());
        }
        Self {
            width: self.width,
            height: self.height,
            pixels,
        }
    }

    /// Intensities quantized to 8 bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn from_bytes(width: usize, height: usize, bytes: &[u8], maxval: u16) -> Result<Self> {
        if bytes.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a {width}x{height} image",
                bytes.len()
            )));
        }
        let scale = f64::from(maxval);
        Ok(Self {
            width,
            height,
            pixels: bytes.iter().map(|&b| f64::from(b) / scale).collect(),
        })
    }

    /// Encodes as binary PGM with maxval 255.
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_bytes());
        out
    }

    pub fn decode_pgm(data: &[u8]) -> std::result::Result<Self, String> {
        let mut cursor = HeaderCursor { data, pos: 0 };
        if cursor.token()? != b"P5" {
            return Err("not a binary PGM (missing P5 magic)".into());
        }
        let width = cursor.number()?;
        let height = cursor.number()?;
        let maxval = cursor.number()?;
        if maxval == 0 || maxval > 255 {
            return Err(format!("unsupported maxval {maxval}"));
        }
        // Exactly one whitespace byte separates the header from the raster.
        match data.get(cursor.pos) {
            Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
            _ => return Err("missing whitespace after maxval".into()),
        }
        let raster = &data[cursor.pos..];
        let expected = width * height;
        if raster.len() < expected {
            return Err(format!(
                "raster has {} bytes, expected {expected}",
                raster.len()
            ));
        }
        Self::from_bytes(width, height, &raster[..expected], maxval as u16)
            .map_err(|e| e.to_string())
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let data = fs::read(path)?;
        Self::decode_pgm(&data).map_err(|reason| Error::Image {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode_pgm())?;
        Ok(())
    }
}

struct HeaderCursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn token(&mut self) -> std::result::Result<&'a [u8], String> {
        loop {
            match self.data.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.data.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = self.pos;
        while let Some(b) = self.data.get(self.pos) {
            if b.is_ascii_whitespace() || *b == b'#' {
                break;
            }
            self.pos += 1;
        }
        Ok(&self.data[start..self.pos])
    }

    fn number(&mut self) -> std::result::Result<usize, String> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad header field `{}`", String::from_utf8_lossy(tok)))
    }
}
