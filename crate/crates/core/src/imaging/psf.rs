//! Point-spread functions and periodic convolution, with matching direct and
//! FFT evaluation paths.

use rustfft::num_complex::Complex64;

use super::{Fft2, Image, ImagingError};

/// Supported blur kernel families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PsfKind {
    /// Isotropic Gaussian with the given standard deviation in pixels,
    /// truncated at three standard deviations and normalized to unit sum.
    Gaussian { sigma: f64 },
    /// `size x size` box blur with uniform weights; `size` must be odd.
    Uniform { size: usize },
    /// Identity kernel (single unit tap).
    Delta,
}

/// A point-spread function stored as sparse taps `(dy, dx, weight)` around
/// the origin. Weights sum to one for the built-in kinds.
#[derive(Clone, Debug)]
pub struct Psf {
    kind: PsfKind,
    taps: Vec<(isize, isize, f64)>,
}

/// Which evaluation path periodic convolution takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvMode {
    /// Dot products against the sparse taps; exact reference path.
    Direct,
    /// Pointwise multiplication in the Fourier domain.
    Fft,
}

impl Psf {
    pub fn new(kind: PsfKind) -> Result<Psf, ImagingError> {
        let taps = match kind {
            PsfKind::Gaussian { sigma } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(ImagingError::BadParam(format!(
                        "gaussian sigma must be positive, got {sigma}"
                    )));
                }
                let radius = (3.0 * sigma).ceil() as isize;
                let mut taps = Vec::new();
                let mut total = 0.0;
                for dy in -radius..=radius {
                    for dx in -radius..=radius {
                        let w = (-((dy * dy + dx * dx) as f64) / (2.0 * sigma * sigma)).exp();
                        taps.push((dy, dx, w));
                        total += w;
                    }
                }
                for t in &mut taps {
                    t.2 /= total;
                }
                taps
            }
            PsfKind::Uniform { size } => {
                if size == 0 || size % 2 == 0 {
                    return Err(ImagingError::BadParam(format!(
                        "uniform kernel size must be odd and positive, got {size}"
                    )));
                }
                let half = (size / 2) as isize;
                let w = 1.0 / (size * size) as f64;
                let mut taps = Vec::with_capacity(size * size);
                for dy in -half..=half {
                    for dx in -half..=half {
                        taps.push((dy, dx, w));
                    }
                }
                taps
            }
            PsfKind::Delta => vec![(0, 0, 1.0)],
        };
        Ok(Psf { kind, taps })
    }

    pub fn kind(&self) -> PsfKind {
        self.kind
    }

    pub fn taps(&self) -> &[(isize, isize, f64)] {
        &self.taps
    }

    /// Kernel embedded into a `width x height` grid with periodic wrap,
    /// origin at pixel (0, 0).
    pub fn embed(&self, width: usize, height: usize) -> Image {
        let mut k = Image::zeros(width, height);
        for &(dy, dx, w) in &self.taps {
            let r = dy.rem_euclid(height as isize) as usize;
            let c = dx.rem_euclid(width as isize) as usize;
            k.set(r, c, k.get(r, c) + w);
        }
        k
    }

    /// Fourier symbol of the kernel on a `width x height` grid.
    pub(crate) fn symbol(&self, fft: &Fft2) -> Vec<Complex64> {
        fft.forward(&self.embed(fft.width(), fft.height()))
    }
}

/// Periodic convolution of `x` with `psf`.
pub fn convolve_psf(x: &Image, psf: &Psf, mode: ConvMode) -> Image {
    convolve_taps(x, psf.taps(), psf, mode, false)
}

/// Adjoint of [`convolve_psf`]: periodic correlation, i.e. convolution with
/// the point-reflected kernel. For symmetric kernels it equals the forward
/// operator.
pub fn convolve_adjoint(x: &Image, psf: &Psf, mode: ConvMode) -> Image {
    convolve_taps(x, psf.taps(), psf, mode, true)
}

fn convolve_taps(
    x: &Image,
    taps: &[(isize, isize, f64)],
    psf: &Psf,
    mode: ConvMode,
    adjoint: bool,
) -> Image {
    let (w, h) = (x.width(), x.height());
    match mode {
        ConvMode::Direct => {
            let mut out = Image::zeros(w, h);
            for r in 0..h {
                for c in 0..w {
                    let mut acc = 0.0;
                    for &(dy, dx, wt) in taps {
                        let (dy, dx) = if adjoint { (-dy, -dx) } else { (dy, dx) };
                        let rr = (r as isize - dy).rem_euclid(h as isize) as usize;
                        let cc = (c as isize - dx).rem_euclid(w as isize) as usize;
                        acc += wt * x.get(rr, cc);
                    }
                    out.set(r, c, acc);
                }
            }
            out
        }
        ConvMode::Fft => {
            let fft = Fft2::new(w, h);
            let sym = psf.symbol(&fft);
            let mut spec = fft.forward(x);
            for (z, k) in spec.iter_mut().zip(&sym) {
                *z *= if adjoint { k.conj() } else { *k };
            }
            fft.inverse_real(spec)
        }
    }
}
