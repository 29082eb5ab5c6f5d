//! Image file I/O: binary 8-bit PGM (read and write) and 8-bit grayscale
//! PNG (read only).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{Image, ImagingError};

/// Serializes to binary PGM (`P5`, maxval 255). Pixels are clamped to
/// `[0, 1]` and rounded to 8 bits, so the byte stream is a pure function of
/// the pixel values.
pub fn write_pgm_to(w: &mut dyn Write, img: &Image) -> Result<(), ImagingError> {
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Writes a binary PGM file.
pub fn write_pgm(path: &Path, img: &Image) -> Result<(), ImagingError> {
    let mut buf = Vec::with_capacity(32 + img.len());
    write_pgm_to(&mut buf, img)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parses a binary PGM (`P5`) with maxval 255; pixels map to `[0, 1]`.
/// Header comments (`#` to end of line) are accepted.
pub fn read_pgm_from(r: &mut dyn Read) -> Result<Image, ImagingError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

/// Reads a binary PGM file.
pub fn read_pgm(path: &Path) -> Result<Image, ImagingError> {
    parse_pgm(&fs::read(path)?)
}

fn parse_pgm(bytes: &[u8]) -> Result<Image, ImagingError> {
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<String, ImagingError> {
        // Skip whitespace and comments between tokens.
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            } else {
                break;
            }
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(ImagingError::BadPgm("truncated header".into()));
        }
        String::from_utf8(bytes[start..*pos].to_vec())
            .map_err(|_| ImagingError::BadPgm("non-ascii header token".into()))
    };

    let magic = token(&mut pos)?;
    if magic != "P5" {
        return Err(ImagingError::BadPgm(format!(
            "expected magic P5, got {magic:?}"
        )));
    }
    let parse_dim = |s: String, what: &str| -> Result<usize, ImagingError> {
        s.parse::<usize>()
            .map_err(|_| ImagingError::BadPgm(format!("bad {what}: {s:?}")))
    };
    let width = parse_dim(token(&mut pos)?, "width")?;
    let height = parse_dim(token(&mut pos)?, "height")?;
    let maxval = parse_dim(token(&mut pos)?, "maxval")?;
    if width == 0 || height == 0 {
        return Err(ImagingError::BadPgm("zero dimension".into()));
    }
    if maxval != 255 {
        return Err(ImagingError::BadPgm(format!(
            "only maxval 255 is supported, got {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImagingError::BadPgm("missing raster separator".into()));
    }
    pos += 1;
    let n = width * height;
    if bytes.len() - pos < n {
        return Err(ImagingError::BadPgm(format!(
            "raster holds {} bytes, expected {n}",
            bytes.len() - pos
        )));
    }
    let data = bytes[pos..pos + n]
        .iter()
        .map(|&b| b as f64 / 255.0)
        .collect();
    Image::from_vec(width, height, data)
}

/// Reads an image file by extension: `.pgm` via the built-in parser, `.png`
/// as 8-bit grayscale.
pub fn read_image(path: &Path) -> Result<Image, ImagingError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => read_pgm(path),
        "png" => {
            let img = image::open(path)
                .map_err(|e| ImagingError::UnsupportedFormat(format!("png decode: {e}")))?;
            let gray = img.into_luma8();
            let (w, h) = (gray.width() as usize, gray.height() as usize);
            let data = gray.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
            Image::from_vec(w, h, data)
        }
        other => Err(ImagingError::UnsupportedFormat(format!(
            "unrecognized extension {other:?} (expected pgm or png)"
        ))),
    }
}
