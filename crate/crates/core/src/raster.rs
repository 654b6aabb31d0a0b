//! Grayscale and complex image buffers plus 8-bit PGM/PNG I/O.

use crate::{Error, Result};
use num_complex::Complex32;
use std::io::{Read, Write};
use std::path::Path;

/// Row-major single-channel image. Pixel values are nominally in [0, 1] for
/// frames; derived rasters (phase, zero-mean test signals) may exceed that.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Parameter(format!(
                "image {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(GrayImage { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        GrayImage {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn constant(rows: usize, cols: usize, v: f32) -> Self {
        GrayImage {
            rows,
            cols,
            data: vec![v; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f32 {
        &mut self.data[r * self.cols + c]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    /// Reads an 8-bit grayscale frame (binary PGM or PNG by extension),
    /// mapping 0..=255 to [0, 1].
    pub fn load(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Self::load_pgm(path),
            Some("png") => {
                let img = image::open(path)
                    .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?
                    .into_luma8();
                let (w, h) = (img.width() as usize, img.height() as usize);
                let data = img.into_raw().iter().map(|&b| b as f32 / 255.0).collect();
                GrayImage::new(h, w, data)
            }
            _ => Err(Error::Parameter(format!(
                "unsupported frame format: {}",
                path.display()
            ))),
        }
    }

    pub fn load_pgm(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        parse_pgm(&bytes)
            .map_err(|msg| Error::Validation(format!("{}: {msg}", path.display())))
    }

    /// Writes a binary (P5) PGM, quantizing [0, 1] to 0..=255.
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let mut buf = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        buf.extend(self.data.iter().map(|&v| quantize_u8(v, 0.0, 1.0)));
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Writes an 8-bit preview with values linearly mapped from [lo, hi]
    /// to 0..=255.
    pub fn save_preview_pgm(&self, path: &Path, lo: f32, hi: f32) -> Result<()> {
        let mut buf = format!("P5\n{} {}\n255\n", self.cols, self.rows).into_bytes();
        buf.extend(self.data.iter().map(|&v| quantize_u8(v, lo, hi)));
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&buf).map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn quantize_u8(v: f32, lo: f32, hi: f32) -> u8 {
    let span = (hi - lo).max(f32::MIN_POSITIVE);
    (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (P5)".into());
    }
    // Header tokens may be separated by whitespace and '#' comments.
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err("malformed PGM header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| "malformed PGM header".to_string())?;
    }
    let (cols, rows, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(format!("only maxval 255 supported, got {maxval}"));
    }
    pos += 1; // single whitespace byte after maxval
    let need = rows * cols;
    if bytes.len() < pos + need {
        return Err("truncated PGM payload".into());
    }
    let data = bytes[pos..pos + need]
        .iter()
        .map(|&b| b as f32 / 255.0)
        .collect();
    GrayImage::new(rows, cols, data).map_err(|e| e.to_string())
}

/// Row-major complex image.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex32>,
}

impl ComplexImage {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex32>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Parameter(format!(
                "complex image {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(ComplexImage { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexImage {
            rows,
            cols,
            data: vec![Complex32::ZERO; rows * cols],
        }
    }

    pub fn from_real(img: &GrayImage) -> Self {
        ComplexImage {
            rows: img.rows,
            cols: img.cols,
            data: img.data.iter().map(|&v| Complex32::new(v, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex32 {
        self.data[r * self.cols + c]
    }
}
