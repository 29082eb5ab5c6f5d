//! Proximal maps and dual-ball operations for the imaging models: the
//! quadratic deblurring data term (closed form via FFT), the masked
//! inpainting data term (pointwise), and the pointwise ball operations on
//! gradient fields used by total-variation regularization.

use rustfft::num_complex::Complex64;

use crate::imaging::{DualField, Fft2, Image, Psf};
use crate::space::InnerSpace;

/// How dual gradient-field iterates are mapped back toward the `beta` ball.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DualProjection {
    /// Exact Euclidean projection onto the pointwise ball of radius `beta`.
    #[default]
    Ball,
    /// Pointwise division by `max(beta, |p|)`. Unlike [`DualProjection::Ball`]
    /// this is not idempotent and not nonexpansive for `beta < 1`; it is kept
    /// as an optional variant because some published parameter sets use it.
    MaxQuotient,
}

impl DualProjection {
    pub fn apply(self, p: &DualField, beta: f64) -> DualField {
        match self {
            DualProjection::Ball => project_dual_ball(p, beta),
            DualProjection::MaxQuotient => normalize_dual_ball(p, beta),
        }
    }
}

fn pointwise_ball(p: &DualField, beta: f64, f: impl Fn(f64) -> f64) -> DualField {
    assert!(beta > 0.0, "ball radius must be positive");
    let mag = p.magnitude();
    let scale_at = |i: usize| f(mag.pixels()[i]);
    let (w, h) = (p.width(), p.height());
    let mut out = DualField::zeros(w, h);
    for i in 0..w * h {
        let s = scale_at(i);
        out.p1.pixels_mut()[i] = p.p1.pixels()[i] * s;
        out.p2.pixels_mut()[i] = p.p2.pixels()[i] * s;
    }
    out
}

/// Exact projection of each pixel's 2-vector onto the ball of radius `beta`.
pub fn project_dual_ball(p: &DualField, beta: f64) -> DualField {
    pointwise_ball(p, beta, |m| if m <= beta { 1.0 } else { beta / m })
}

/// Pointwise `p / max(beta, |p|)`: vectors outside the `beta` ball land on
/// the unit sphere, vectors inside are amplified by `1/beta`.
pub fn normalize_dual_ball(p: &DualField, beta: f64) -> DualField {
    pointwise_ball(p, beta, |m| 1.0 / beta.max(m))
}

/// Pointwise group soft-threshold of a gradient field: each pixel 2-vector
/// is shortened by `threshold`, vanishing when its magnitude is below it.
/// This is the proximal map of `threshold * sum_i |q_i|_2`.
pub fn tv_shrink(p: &DualField, threshold: f64) -> DualField {
    assert!(threshold >= 0.0, "threshold must be nonnegative");
    pointwise_ball(p, threshold.max(f64::MIN_POSITIVE), |m| {
        if m <= threshold {
            0.0
        } else {
            (m - threshold) / m
        }
    })
}

/// Closed-form proximal map of the blur data term
/// `x -> (lambda / 2) * || blur(x) - observed ||^2`
/// under periodic boundary conditions, evaluated in the Fourier domain.
///
/// Construction precomputes the kernel spectrum and the observed image's
/// cross term, so each application costs two transforms.
pub struct DeblurProx {
    fft: Fft2,
    cross: Vec<Complex64>,
    kernel_sq: Vec<f64>,
    lambda: f64,
}

impl DeblurProx {
    pub fn new(observed: &Image, psf: &Psf, lambda: f64) -> DeblurProx {
        assert!(lambda > 0.0, "data weight must be positive");
        let fft = Fft2::new(observed.width(), observed.height());
        let khat = psf.symbol(&fft);
        let yhat = fft.forward(observed);
        let cross = khat
            .iter()
            .zip(&yhat)
            .map(|(k, y)| k.conj() * y)
            .collect();
        let kernel_sq = khat.iter().map(|k| k.norm_sqr()).collect();
        DeblurProx {
            fft,
            cross,
            kernel_sq,
            lambda,
        }
    }

    /// Minimizer of `(tau * lambda / 2) || blur(x) - observed ||^2
    /// + (1/2) || x - xt ||^2`.
    pub fn apply(&self, xt: &Image, tau: f64) -> Image {
        assert!(tau > 0.0, "prox step must be positive");
        let tl = tau * self.lambda;
        let mut spec = self.fft.forward(xt);
        for i in 0..spec.len() {
            spec[i] = (spec[i] + tl * self.cross[i]) / (tl * self.kernel_sq[i] + 1.0);
        }
        self.fft.inverse_real(spec)
    }
}

/// Pointwise proximal map of the masked quadratic inpainting data term
/// `x -> lambda * || mask .* (x - observed) ||^2`.
pub struct InpaintProx {
    mask: Image,
    masked_observed: Image,
    lambda: f64,
}

impl InpaintProx {
    pub fn new(observed: &Image, mask: &Image, lambda: f64) -> InpaintProx {
        assert!(lambda > 0.0, "data weight must be positive");
        InpaintProx {
            mask: mask.clone(),
            masked_observed: mask.zip(observed, |m, y| m * y),
            lambda,
        }
    }

    /// Minimizer of `tau * lambda || mask .* (x - observed) ||^2
    /// + (1/2) || x - xt ||^2`, solved pixel by pixel.
    pub fn apply(&self, xt: &Image, tau: f64) -> Image {
        assert!(tau > 0.0, "prox step must be positive");
        let tl = 2.0 * tau * self.lambda;
        let mut out = xt.clone();
        for i in 0..out.len() {
            let m = self.mask.pixels()[i];
            out.pixels_mut()[i] =
                (tl * self.masked_observed.pixels()[i] + xt.pixels()[i]) / (1.0 + tl * m);
        }
        out
    }
}

/// Residual of the Moreau decomposition
/// `z = prox_{sigma h}(z) + sigma * prox_{h*/sigma}(z / sigma)`
/// for a convex function given through its two proximal maps. Both closures
/// take `(point, step)`. A correct conjugate pair drives this to rounding
/// error for every `z` and `sigma > 0`.
pub fn moreau_residual<S: InnerSpace>(
    prox_h: impl Fn(&S, f64) -> S,
    prox_hstar: impl Fn(&S, f64) -> S,
    z: &S,
    sigma: f64,
) -> f64 {
    assert!(sigma > 0.0, "step must be positive");
    let a = prox_h(z, sigma);
    let zs = S::lincomb(1.0 / sigma, z, 0.0, z);
    let b = prox_hstar(&zs, 1.0 / sigma);
    let recon = S::lincomb(1.0, &a, sigma, &b);
    z.dist(&recon)
}
