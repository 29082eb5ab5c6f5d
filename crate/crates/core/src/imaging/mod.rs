//! Image containers and the discrete imaging operators used by the solvers:
//! forward-difference gradient with its exact negative-adjoint divergence,
//! periodic PSF convolution, masks, white Gaussian noise, PSNR, and binary
//! PGM I/O.

mod fft;
mod io;
mod mask;
mod psf;

pub use io::{read_image, read_pgm, read_pgm_from, write_pgm, write_pgm_to};
pub use mask::Mask;
pub use psf::{convolve_adjoint, convolve_psf, ConvMode, Psf, PsfKind};

pub(crate) use fft::Fft2;

use crate::space::InnerSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Errors from image construction, file I/O and operator preconditions.
#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid image: {0}")]
    BadImage(String),
    #[error("invalid PGM data: {0}")]
    BadPgm(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid parameter: {0}")]
    BadParam(String),
}

/// Grayscale image with `f64` pixels stored row-major.
///
/// Pixel values nominally live in `[0, 1]`; intermediate solver iterates may
/// leave that range and are only clamped when quantizing to 8 bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// All-zero image. Panics if either dimension is zero.
    pub fn zeros(width: usize, height: usize) -> Image {
        assert!(width > 0 && height > 0, "image dimensions must be nonzero");
        Image {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    /// Constant image.
    pub fn constant(width: usize, height: usize, value: f64) -> Image {
        let mut img = Image::zeros(width, height);
        img.data.fill(value);
        img
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Image {
        let mut img = Image::zeros(width, height);
        for r in 0..height {
            for c in 0..width {
                img.data[r * width + c] = f(r, c);
            }
        }
        img
    }

    /// Wraps a row-major pixel buffer.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Image, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::BadImage("zero dimension".into()));
        }
        if data.len() != width * height {
            return Err(ImagingError::BadImage(format!(
                "buffer holds {} pixels, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Image {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Applies `f` to every pixel.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two same-shape images pixelwise. Panics on shape mismatch.
    pub fn zip(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        assert!(self.same_shape(other), "image shape mismatch");
        Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Pixels clamped to `[0, 1]`.
    pub fn clamped01(&self) -> Image {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Largest absolute pixel difference to another image of the same shape.
    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        assert!(self.same_shape(other), "image shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

impl InnerSpace for Image {
    fn lincomb(a: f64, u: &Self, b: f64, v: &Self) -> Self {
        assert!(u.same_shape(v), "image shape mismatch");
        Image {
            width: u.width,
            height: u.height,
            data: u
                .data
                .iter()
                .zip(&v.data)
                .map(|(&ui, &vi)| a * ui + b * vi)
                .collect(),
        }
    }

    fn dot(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other), "image shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Two-component pixel field, the range of the discrete gradient.
///
/// `p1` holds horizontal (column-direction) components, `p2` vertical
/// (row-direction) components.
#[derive(Clone, Debug, PartialEq)]
pub struct DualField {
    pub p1: Image,
    pub p2: Image,
}

impl DualField {
    pub fn zeros(width: usize, height: usize) -> DualField {
        DualField {
            p1: Image::zeros(width, height),
            p2: Image::zeros(width, height),
        }
    }

    pub fn new(p1: Image, p2: Image) -> DualField {
        assert!(p1.same_shape(&p2), "dual field components differ in shape");
        DualField { p1, p2 }
    }

    pub fn width(&self) -> usize {
        self.p1.width()
    }

    pub fn height(&self) -> usize {
        self.p1.height()
    }

    /// Pointwise Euclidean magnitude of the two components.
    pub fn magnitude(&self) -> Image {
        self.p1.zip(&self.p2, |a, b| (a * a + b * b).sqrt())
    }

    /// Largest absolute component difference to another field.
    pub fn max_abs_diff(&self, other: &DualField) -> f64 {
        self.p1
            .max_abs_diff(&other.p1)
            .max(self.p2.max_abs_diff(&other.p2))
    }
}

impl InnerSpace for DualField {
    fn lincomb(a: f64, u: &Self, b: f64, v: &Self) -> Self {
        DualField {
            p1: Image::lincomb(a, &u.p1, b, &v.p1),
            p2: Image::lincomb(a, &u.p2, b, &v.p2),
        }
    }

    fn dot(&self, other: &Self) -> f64 {
        self.p1.dot(&other.p1) + self.p2.dot(&other.p2)
    }

    fn all_finite(&self) -> bool {
        self.p1.all_finite() && self.p2.all_finite()
    }
}

/// Forward-difference gradient with Neumann (replicate) boundary: the last
/// column of `p1` and last row of `p2` are zero.
pub fn grad(x: &Image) -> DualField {
    let (w, h) = (x.width(), x.height());
    let mut p1 = Image::zeros(w, h);
    let mut p2 = Image::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                p1.set(r, c, x.get(r, c + 1) - x.get(r, c));
            }
            if r + 1 < h {
                p2.set(r, c, x.get(r + 1, c) - x.get(r, c));
            }
        }
    }
    DualField { p1, p2 }
}

/// Discrete divergence, the exact negative adjoint of [`grad`]:
/// `<grad x, p> = -<x, div p>` holds to machine precision for all inputs.
pub fn div(p: &DualField) -> Image {
    let (w, h) = (p.width(), p.height());
    let mut out = Image::zeros(w, h);
    for r in 0..h {
        for c in 0..w {
            let mut v = 0.0;
            if c + 1 < w {
                v += p.p1.get(r, c);
            }
            if c >= 1 {
                v -= p.p1.get(r, c - 1);
            }
            if r + 1 < h {
                v += p.p2.get(r, c);
            }
            if r >= 1 {
                v -= p.p2.get(r - 1, c);
            }
            out.set(r, c, v);
        }
    }
    out
}

/// Adds white Gaussian noise of standard deviation `sigma`, sampled
/// row-major from a ChaCha8 stream seeded with `seed`.
pub fn add_wgn(x: &Image, sigma: f64, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    for v in out.pixels_mut() {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        *v += sigma * z;
    }
    out
}

/// Uniform `[0, 1)` random image from a ChaCha8 stream seeded with `seed`.
pub fn uniform_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Image::zeros(width, height);
    for v in out.pixels_mut() {
        *v = rng.random::<f64>();
    }
    out
}

/// Standard-normal random image from a ChaCha8 stream seeded with `seed`.
pub fn normal_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Image::zeros(width, height);
    for v in out.pixels_mut() {
        *v = rng.sample(rand_distr::StandardNormal);
    }
    out
}

/// Peak signal-to-noise ratio in dB against a reference image.
///
/// Returns `f64::INFINITY` when the images are identical (zero MSE); the
/// sentinel serializes as `inf`. Panics on shape mismatch.
pub fn psnr(x: &Image, reference: &Image, peak: f64) -> f64 {
    assert!(x.same_shape(reference), "image shape mismatch");
    assert!(peak > 0.0, "peak must be positive");
    let mse: f64 = x
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Bundled synthetic test scene: smooth waves and Gaussian bumps with a few
/// hard-edged shapes and a mild texture field, values in `[0.02, 0.98]`.
///
/// Deterministic for a given size; the texture stream is fixed (ChaCha8,
/// seed 42) so the bundled assets can be regenerated bit-identically.
pub fn synthetic_scene(n: usize) -> Image {
    assert!(n >= 16, "scene size too small");
    let nf = n as f64;
    let mut img = Image::from_fn(n, n, |r, c| {
        let x = c as f64 / nf;
        let y = r as f64 / nf;
        let mut v = 0.35
            + 0.25
                * (2.2 * std::f64::consts::PI * x).sin()
                * (1.7 * std::f64::consts::PI * y).cos();
        for &(cy, cx, s, a) in &[
            (0.30, 0.25, 0.16, 0.35),
            (0.70, 0.60, 0.22, -0.25),
            (0.25, 0.75, 0.12, 0.30),
            (0.80, 0.20, 0.10, 0.20),
            (0.55, 0.35, 0.30, 0.15),
        ] {
            let d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            v += a * (-d2 / (2.0 * s * s)).exp();
        }
        v
    });
    // Hard-edged block and disc keep some genuinely sharp structure.
    let (r0, r1) = ((0.58 * nf) as usize, (0.70 * nf) as usize);
    let (c0, c1) = ((0.80 * nf) as usize, (0.92 * nf) as usize);
    for r in r0..r1 {
        for c in c0..c1 {
            img.set(r, c, 0.85);
        }
    }
    for r in 0..n {
        for c in 0..n {
            let y = r as f64 / nf;
            let x = c as f64 / nf;
            if (y - 0.15) * (y - 0.15) + (x - 0.5) * (x - 0.5) <= 0.004 {
                img.set(r, c, 0.12);
            }
        }
    }
    // Mild band-limited texture, normalized to a fixed standard deviation.
    let noise = normal_image(n, n, 42);
    let psf = Psf::new(PsfKind::Gaussian { sigma: 1.2 }).expect("valid kernel");
    let tex = convolve_psf(&noise, &psf, ConvMode::Fft);
    let mean = tex.mean();
    let sd = (tex.pixels().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        / tex.len() as f64)
        .sqrt();
    let img = img.zip(&tex, |v, t| v + 0.03 * (t - mean) / sd);
    img.map(|v| v.clamp(0.02, 0.98))
}

/// Glyph-stroke overlay mask: 1 marks observed pixels, 0 masked strokes.
///
/// Rows of block glyphs built from 4-pixel-wide strokes; with the default
/// seed about a fifth of the pixels are masked. Deterministic per
/// (size, seed).
pub fn glyph_mask(n: usize, seed: u64) -> Image {
    assert!(n >= 64, "glyph mask needs at least 64 pixels per side");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Image::constant(n, n, 1.0);
    let fill = |m: &mut Image, r0: usize, r1: usize, c0: usize, c1: usize| {
        for r in r0..r1.min(n) {
            for c in c0..c1.min(n) {
                m.set(r, c, 0.0);
            }
        }
    };
    let mut row = 8;
    while row + 20 < n {
        let mut col = 10;
        while col + 18 < n {
            let gw = rng.random_range(8..16);
            let gh = rng.random_range(12..18);
            fill(&mut m, row, row + gh, col, col + 4);
            fill(&mut m, row, row + 4, col, col + gw);
            if rng.random::<f64>() < 0.5 {
                fill(&mut m, row + gh / 2, row + gh / 2 + 4, col, col + gw);
            }
            if rng.random::<f64>() < 0.5 {
                fill(&mut m, row, row + gh, col + gw - 4, col + gw);
            }
            col += gw + 8;
        }
        row += 28;
    }
    m
}
