//! Binary observation masks for inpainting: 1 keeps a pixel, 0 drops it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Image, ImagingError};

/// Binary pixel mask. Entry 1 marks an observed pixel, 0 a missing one.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    m: Image,
}

impl Mask {
    /// Random mask dropping each pixel independently with probability
    /// `p_missing`, sampled row-major from a ChaCha8 stream.
    pub fn bernoulli(
        width: usize,
        height: usize,
        p_missing: f64,
        seed: u64,
    ) -> Result<Mask, ImagingError> {
        if !(0.0..=1.0).contains(&p_missing) {
            return Err(ImagingError::BadParam(format!(
                "missing-pixel probability must be in [0, 1], got {p_missing}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Image::zeros(width, height);
        for v in m.pixels_mut() {
            *v = if rng.random::<f64>() < p_missing { 0.0 } else { 1.0 };
        }
        Ok(Mask { m })
    }

    /// Thresholds an image at 1/2: pixels at or above become observed.
    pub fn from_image(img: &Image) -> Mask {
        Mask {
            m: img.map(|v| if v >= 0.5 { 1.0 } else { 0.0 }),
        }
    }

    /// Mask keeping every pixel.
    pub fn full(width: usize, height: usize) -> Mask {
        Mask {
            m: Image::constant(width, height, 1.0),
        }
    }

    pub fn width(&self) -> usize {
        self.m.width()
    }

    pub fn height(&self) -> usize {
        self.m.height()
    }

    /// The mask as a 0/1 image.
    pub fn as_image(&self) -> &Image {
        &self.m
    }

    #[inline]
    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.m.get(row, col) != 0.0
    }

    /// Fraction of pixels kept.
    pub fn observed_fraction(&self) -> f64 {
        self.m.mean()
    }

    /// Zeros out the missing pixels of `x`.
    pub fn apply(&self, x: &Image) -> Image {
        x.zip(&self.m, |v, m| v * m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::uniform_image;

    #[test]
    fn bernoulli_fraction_is_close_to_target() {
        let mask = Mask::bernoulli(128, 128, 0.5, 21).unwrap();
        let kept = mask.observed_fraction();
        assert!((0.47..=0.53).contains(&kept), "kept {kept}");
    }

    #[test]
    fn bernoulli_is_seed_deterministic() {
        let a = Mask::bernoulli(32, 32, 0.3, 5).unwrap();
        let b = Mask::bernoulli(32, 32, 0.3, 5).unwrap();
        let c = Mask::bernoulli(32, 32, 0.3, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bernoulli_rejects_bad_probability() {
        assert!(Mask::bernoulli(8, 8, -0.1, 0).is_err());
        assert!(Mask::bernoulli(8, 8, 1.5, 0).is_err());
    }

    #[test]
    fn apply_zeros_missing_pixels() {
        let mask = Mask::bernoulli(16, 16, 0.4, 2).unwrap();
        let x = uniform_image(16, 16, 3);
        let y = mask.apply(&x);
        for r in 0..16 {
            for c in 0..16 {
                if mask.is_observed(r, c) {
                    assert_eq!(y.get(r, c), x.get(r, c));
                } else {
                    assert_eq!(y.get(r, c), 0.0);
                }
            }
        }
    }

    #[test]
    fn from_image_thresholds_at_half() {
        let img = Image::from_fn(4, 1, |_, c| c as f64 / 4.0 + 0.125);
        let mask = Mask::from_image(&img);
        assert_eq!(mask.as_image().pixels(), &[0.0, 0.0, 1.0, 1.0]);
    }
}
