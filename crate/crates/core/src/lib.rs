//! Splitting methods for saddle-point problems whose preconditioner may be
//! degenerate: anchored (strongly convergent) and relaxed fixed-point
//! drivers, total-variation image restoration, denoiser-residual
//! regularization, an exactly solvable scalar model, and brute-force
//! verification oracles.
//!
//! The crate is organized bottom up:
//!
//! - [`space`]: inner-product space abstraction and primal-dual pairs.
//! - [`seed`]: deterministic sub-seed derivation.
//! - [`imaging`]: images, dual vector fields, gradients, convolution, masks,
//!   PGM and PNG input, synthetic scenes, PSNR.
//! - [`prox`]: proximal maps of the data terms and dual-ball projections.
//! - [`fixedpoint`]: schedules, anchored and relaxed drivers, run traces,
//!   rate fitting.
//! - [`precond`]: step preconditioner, the primal-dual resolvent step, and
//!   firm-nonexpansiveness probes.
//! - [`toy`]: the scalar saddle problem with closed-form limits.
//! - [`denoise`]: linear denoisers and their assumption checks.
//! - [`grared`]: denoiser-residual splitting with anchored and relaxed
//!   drivers plus Douglas-Rachford and ADMM oracles.
//! - [`restore`]: named end-to-end restoration presets and studies.
//! - [`checks`]: runnable property suites over all of the above.

pub mod checks;
pub mod denoise;
pub mod fixedpoint;
pub mod grared;
pub mod imaging;
pub mod precond;
pub mod prox;
pub mod restore;
pub mod seed;
pub mod space;
pub mod toy;

pub use checks::{run_suite, CheckItem, Suite};
pub use fixedpoint::{
    rate_fit, DriverError, RateFit, RunTrace, Schedule, ScheduleFamily, TraceField, TraceRow,
};
pub use imaging::{DualField, Image, Mask, Psf, PsfKind};
pub use restore::{
    preset, preset_ids, run_preset, run_preset_with, ExperimentPreset, RestoreError,
    RestoreResult, RunOverrides,
};
pub use space::{InnerSpace, PrimalDual};
