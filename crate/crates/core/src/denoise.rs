//! Denoisers usable as implicit regularizers inside the splitting schemes.
//!
//! The convergence theory asks three things of a denoiser `D`: positive
//! homogeneity (`D(c x) = c D(x)`), a symmetric Jacobian, and a nonexpansive
//! residual `R = I - D`. The built-in denoisers are linear and symmetric by
//! construction; [`check_denoiser_assumptions`] measures all three properties
//! so external denoisers can be audited against the same contract.

use std::io::Read;
use std::process::{Command, Stdio};

use thiserror::Error;

use crate::imaging::{
    convolve_psf, normal_image, read_pgm_from, write_pgm_to, ConvMode, Image, ImagingError, Psf,
    PsfKind,
};
use crate::space::InnerSpace;

/// Errors from denoiser construction and evaluation.
#[derive(Debug, Error)]
pub enum DenoiseError {
    #[error("invalid denoiser parameter: {0}")]
    BadParam(String),
    #[error(
        "denoiser residual is expansive (norm {norm} > 1); it cannot serve as a proximal map"
    )]
    Expansive { norm: f64 },
    #[error("external denoiser failed: {0}")]
    External(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// Available denoiser families.
#[derive(Clone, Debug)]
pub enum DenoiserKind {
    /// Periodic convolution with a unit-sum Gaussian kernel of width `sigma`.
    GaussianConv { sigma: f64 },
    /// Pointwise scaling `D x = alpha x` with `alpha` in `(0, 1]`.
    Shrink { alpha: f64 },
    /// External command receiving a binary PGM on stdin and answering with a
    /// binary PGM of the same shape on stdout. The 8-bit wire format
    /// quantizes values, so such denoisers are only approximately linear.
    External { command: String },
}

/// A denoiser with validated parameters. Built-in kinds are checked at
/// construction for a nonexpansive residual on a fixed probe; external
/// commands are validated only through the check suite, since running them
/// here would execute the command at construction time.
pub struct Denoiser {
    kind: DenoiserKind,
    psf: Option<Psf>,
}

impl Denoiser {
    pub fn gaussian_conv(sigma: f64) -> Result<Denoiser, DenoiseError> {
        let psf = Psf::new(PsfKind::Gaussian { sigma })
            .map_err(|e| DenoiseError::BadParam(e.to_string()))?;
        let d = Denoiser {
            kind: DenoiserKind::GaussianConv { sigma },
            psf: Some(psf),
        };
        d.gate_residual_norm()?;
        Ok(d)
    }

    pub fn shrink(alpha: f64) -> Result<Denoiser, DenoiseError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(DenoiseError::BadParam(format!(
                "shrink factor must be in (0, 1], got {alpha}"
            )));
        }
        let d = Denoiser {
            kind: DenoiserKind::Shrink { alpha },
            psf: None,
        };
        d.gate_residual_norm()?;
        Ok(d)
    }

    pub fn external(command: impl Into<String>) -> Result<Denoiser, DenoiseError> {
        let command = command.into();
        if command.split_whitespace().next().is_none() {
            return Err(DenoiseError::BadParam("empty external command".into()));
        }
        Ok(Denoiser {
            kind: DenoiserKind::External { command },
            psf: None,
        })
    }

    pub fn kind(&self) -> &DenoiserKind {
        &self.kind
    }

    fn gate_residual_norm(&self) -> Result<(), DenoiseError> {
        let norm = self.residual_norm_estimate(32, 77, 24)?;
        if norm > 1.0 + 1e-6 {
            return Err(DenoiseError::Expansive { norm });
        }
        Ok(())
    }

    /// Applies the denoiser.
    pub fn apply(&self, x: &Image) -> Result<Image, DenoiseError> {
        match &self.kind {
            DenoiserKind::GaussianConv { .. } => Ok(convolve_psf(
                x,
                self.psf.as_ref().expect("kernel built at construction"),
                ConvMode::Fft,
            )),
            DenoiserKind::Shrink { alpha } => {
                let a = *alpha;
                Ok(x.map(|v| a * v))
            }
            DenoiserKind::External { command } => self.apply_external(command, x),
        }
    }

    /// Denoising residual `x - D(x)`, the operator the splitting schemes use
    /// in place of a dual proximal map.
    pub fn residual(&self, x: &Image) -> Result<Image, DenoiseError> {
        let dx = self.apply(x)?;
        Ok(Image::lincomb(1.0, x, -1.0, &dx))
    }

    /// Power-iteration estimate of the residual's operator norm on a
    /// `size x size` probe.
    pub fn residual_norm_estimate(
        &self,
        size: usize,
        seed: u64,
        sweeps: usize,
    ) -> Result<f64, DenoiseError> {
        let mut v = normal_image(size, size, seed);
        let n0 = v.norm();
        v = Image::lincomb(1.0 / n0, &v, 0.0, &v);
        for _ in 0..sweeps {
            let next = self.residual(&v)?;
            let n = next.norm();
            if n == 0.0 {
                return Ok(0.0);
            }
            v = Image::lincomb(1.0 / n, &next, 0.0, &next);
        }
        Ok(self.residual(&v)?.norm() / v.norm())
    }

    fn apply_external(&self, command: &str, x: &Image) -> Result<Image, DenoiseError> {
        let mut parts = command.split_whitespace();
        let program = parts.next().expect("validated nonempty at construction");
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| DenoiseError::External(format!("spawn {program:?}: {e}")))?;

        let mut payload = Vec::with_capacity(32 + x.len());
        write_pgm_to(&mut payload, x)?;
        let mut stdin = child.stdin.take().expect("stdin piped");
        // Feed stdin from a separate thread: a denoiser that writes output
        // before draining its input would otherwise deadlock both pipes.
        let writer = std::thread::spawn(move || {
            use std::io::Write;
            stdin.write_all(&payload)
        });
        let mut stdout = Vec::new();
        child
            .stdout
            .take()
            .expect("stdout piped")
            .read_to_end(&mut stdout)
            .map_err(|e| DenoiseError::External(format!("read output: {e}")))?;
        let mut stderr = String::new();
        if let Some(mut err) = child.stderr.take() {
            let _ = err.read_to_string(&mut stderr);
        }
        let status = child
            .wait()
            .map_err(|e| DenoiseError::External(format!("wait: {e}")))?;
        // A broken pipe on stdin is the child's failure to consume input;
        // surface the exit status instead of the write error.
        let write_result = writer.join().expect("stdin writer panicked");
        if !status.success() {
            return Err(DenoiseError::External(format!(
                "command exited with {status}: {}",
                stderr.trim()
            )));
        }
        if let Err(e) = write_result {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(DenoiseError::External(format!("write input: {e}")));
            }
        }
        let out = read_pgm_from(&mut stdout.as_slice())
            .map_err(|e| DenoiseError::External(format!("bad output image: {e}")))?;
        if !out.same_shape(x) {
            return Err(DenoiseError::External(format!(
                "output shape {}x{} does not match input {}x{}",
                out.width(),
                out.height(),
                x.width(),
                x.height()
            )));
        }
        Ok(out)
    }
}

/// Measured compliance with the denoiser contract.
#[derive(Clone, Copy, Debug)]
pub struct DenoiserReport {
    /// Worst normalized homogeneity defect
    /// `||D(c x) - c D(x)|| / (1 + c ||x||)` over probes and scales.
    pub homogeneity_err: f64,
    /// Worst normalized symmetry defect
    /// `|<D x, z> - <x, D z>| / (1 + ||x|| ||z||)` over probe pairs.
    pub symmetry_err: f64,
    /// Power-iteration norm estimate of the residual `I - D`.
    pub residual_norm: f64,
}

/// Measures homogeneity, Jacobian symmetry, and the residual norm on seeded
/// `size x size` probes.
pub fn check_denoiser_assumptions(
    d: &Denoiser,
    size: usize,
    seed: u64,
) -> Result<DenoiserReport, DenoiseError> {
    let mut homogeneity_err: f64 = 0.0;
    let mut symmetry_err: f64 = 0.0;
    for i in 0..3u64 {
        let x = normal_image(size, size, seed.wrapping_add(2 * i));
        let z = normal_image(size, size, seed.wrapping_add(2 * i + 1));
        let dx = d.apply(&x)?;
        let dz = d.apply(&z)?;
        for c in [0.5, 2.0, 10.0] {
            let scaled = d.apply(&Image::lincomb(c, &x, 0.0, &x))?;
            let defect = Image::lincomb(1.0, &scaled, -c, &dx).norm();
            homogeneity_err = homogeneity_err.max(defect / (1.0 + c * x.norm()));
        }
        let asym = (dx.dot(&z) - x.dot(&dz)).abs();
        symmetry_err = symmetry_err.max(asym / (1.0 + x.norm() * z.norm()));
    }
    let residual_norm = d.residual_norm_estimate(size, seed.wrapping_add(99), 30)?;
    Ok(DenoiserReport {
        homogeneity_err,
        symmetry_err,
        residual_norm,
    })
}
