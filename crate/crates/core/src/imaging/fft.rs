//! Thin 2D FFT wrapper over `rustfft`, used for periodic convolution and
//! the closed-form quadratic data-term solves.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::Image;

/// Planned forward/inverse 2D FFT for a fixed image size.
///
/// Transforms are unnormalized in the forward direction; the inverse divides
/// by `width * height` so `inverse(forward(x)) == x` up to rounding.
pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub(crate) fn new(width: usize, height: usize) -> Fft2 {
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            fwd_row: planner.plan_fft_forward(width),
            fwd_col: planner.plan_fft_forward(height),
            inv_row: planner.plan_fft_inverse(width),
            inv_col: planner.plan_fft_inverse(height),
        }
    }

    pub(crate) fn width(&self) -> usize {
        self.width
    }

    pub(crate) fn height(&self) -> usize {
        self.height
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(buf.len(), w * h);
        let row_fft = if forward { &self.fwd_row } else { &self.inv_row };
        let col_fft = if forward { &self.fwd_col } else { &self.inv_col };
        for row in buf.chunks_exact_mut(w) {
            row_fft.process(row);
        }
        let mut col = vec![Complex64::default(); h];
        for c in 0..w {
            for r in 0..h {
                col[r] = buf[r * w + c];
            }
            col_fft.process(&mut col);
            for r in 0..h {
                buf[r * w + c] = col[r];
            }
        }
    }

    /// Forward 2D transform of a real image.
    pub(crate) fn forward(&self, x: &Image) -> Vec<Complex64> {
        debug_assert!(x.width() == self.width && x.height() == self.height);
        let mut buf: Vec<Complex64> = x
            .pixels()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.transform(&mut buf, true);
        buf
    }

    /// Inverse 2D transform, returning the real part as an image.
    pub(crate) fn inverse_real(&self, mut buf: Vec<Complex64>) -> Image {
        self.transform(&mut buf, false);
        let scale = 1.0 / (self.width * self.height) as f64;
        Image::from_vec(
            self.width,
            self.height,
            buf.iter().map(|z| z.re * scale).collect(),
        )
        .expect("size preserved by transform")
    }
}
