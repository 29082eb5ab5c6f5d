//! Generic fixed-point drivers: Krasnoselskii-Mann relaxation and
//! Halpern anchoring around an arbitrary nonexpansive step, plus iteration
//! traces, coefficient schedules, and log-log rate fitting.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::space::InnerSpace;

/// Errors from drivers, schedules and trace handling.
#[derive(Debug, Error)]
pub enum DriverError {
    #[error("iterate diverged (non-finite values) at iteration {iter}")]
    Diverged { iter: u64 },
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
    #[error("rate fit needs at least two positive samples in the window, found {found}")]
    RateFitInsufficient { found: usize },
    #[error("invalid trace: {0}")]
    BadTrace(String),
}

/// Coefficient sequence families for anchoring and relaxation weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleFamily {
    /// `c / (k + k0)`.
    InverseShift { c: f64, k0: f64 },
    /// `(k + 1)^(-alpha)`.
    InversePower { alpha: f64 },
    /// `1` at `k = 0`, otherwise `min(2 / k, 1)`.
    MinTwoOverK,
    /// Fixed value, valid for relaxation weights only.
    Constant { value: f64 },
}

impl ScheduleFamily {
    /// Raw sequence value at index `k`.
    pub fn value(self, k: u64) -> f64 {
        match self {
            ScheduleFamily::InverseShift { c, k0 } => c / (k as f64 + k0),
            ScheduleFamily::InversePower { alpha } => (k as f64 + 1.0).powf(-alpha),
            ScheduleFamily::MinTwoOverK => {
                if k == 0 {
                    1.0
                } else {
                    (2.0 / k as f64).min(1.0)
                }
            }
            ScheduleFamily::Constant { value } => value,
        }
    }
}

impl FromStr for ScheduleFamily {
    type Err = DriverError;

    /// Parses `inv-shift:<c>:<k0>`, `inv-pow:<alpha>`, `min2k`, `const:<v>`.
    fn from_str(s: &str) -> Result<ScheduleFamily, DriverError> {
        let bad = |msg: String| DriverError::BadSchedule(msg);
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str, what: &str| -> Result<f64, DriverError> {
            t.parse::<f64>()
                .map_err(|_| bad(format!("bad {what} in {s:?}")))
        };
        match parts.as_slice() {
            ["inv-shift", c, k0] => Ok(ScheduleFamily::InverseShift {
                c: num(c, "c")?,
                k0: num(k0, "k0")?,
            }),
            ["inv-pow", alpha] => Ok(ScheduleFamily::InversePower {
                alpha: num(alpha, "alpha")?,
            }),
            ["min2k"] => Ok(ScheduleFamily::MinTwoOverK),
            ["const", v] => Ok(ScheduleFamily::Constant {
                value: num(v, "value")?,
            }),
            _ => Err(bad(format!(
                "unrecognized schedule {s:?} (expected inv-shift:<c>:<k0>, inv-pow:<alpha>, min2k, or const:<v>)"
            ))),
        }
    }
}

/// What a schedule drives; validation differs per role.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleRole {
    /// Anchoring weights: must decay to zero with divergent sum, values in
    /// `(0, 1]`.
    Anchor,
    /// Relaxation weights: values must stay in `(0, 2)` (or `(0, 1]` for the
    /// decaying families).
    Relaxation,
}

/// A validated coefficient schedule bound to its role.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    family: ScheduleFamily,
    role: ScheduleRole,
}

impl Schedule {
    /// Validates `family` as an anchoring schedule.
    pub fn anchor(family: ScheduleFamily) -> Result<Schedule, DriverError> {
        let bad = |msg: String| DriverError::BadSchedule(msg);
        match family {
            ScheduleFamily::InverseShift { c, k0 } => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(bad(format!("inv-shift needs c > 0, got {c}")));
                }
                if !(k0 >= 1.0) || !k0.is_finite() {
                    return Err(bad(format!("inv-shift needs k0 >= 1, got {k0}")));
                }
                if c > k0 {
                    return Err(bad(format!(
                        "inv-shift needs c <= k0 so weights stay within 1, got c={c}, k0={k0}"
                    )));
                }
            }
            ScheduleFamily::InversePower { alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(bad(format!(
                        "inv-pow needs alpha in (0, 1], got {alpha}"
                    )));
                }
            }
            ScheduleFamily::MinTwoOverK => {}
            ScheduleFamily::Constant { value } => {
                return Err(bad(format!(
                    "constant schedule ({value}) cannot anchor; anchoring weights must decay"
                )));
            }
        }
        Ok(Schedule {
            family,
            role: ScheduleRole::Anchor,
        })
    }

    /// Validates `family` as a relaxation schedule.
    pub fn relaxation(family: ScheduleFamily) -> Result<Schedule, DriverError> {
        let bad = |msg: String| DriverError::BadSchedule(msg);
        match family {
            ScheduleFamily::InverseShift { c, k0 } => {
                if !(c > 0.0) || !(k0 >= 1.0) || c > k0 {
                    return Err(bad(format!(
                        "inv-shift relaxation needs 0 < c <= k0 and k0 >= 1, got c={c}, k0={k0}"
                    )));
                }
            }
            ScheduleFamily::InversePower { alpha } => {
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(bad(format!(
                        "inv-pow needs alpha in (0, 1], got {alpha}"
                    )));
                }
            }
            ScheduleFamily::MinTwoOverK => {}
            ScheduleFamily::Constant { value } => {
                if !(value > 0.0 && value < 2.0) {
                    return Err(bad(format!(
                        "constant relaxation needs a value in (0, 2), got {value}"
                    )));
                }
            }
        }
        Ok(Schedule {
            family,
            role: ScheduleRole::Relaxation,
        })
    }

    pub fn family(&self) -> ScheduleFamily {
        self.family
    }

    pub fn role(&self) -> ScheduleRole {
        self.role
    }

    /// Sequence value at index `k`.
    pub fn value(&self, k: u64) -> f64 {
        self.family.value(k)
    }
}

/// One recorded iteration of a driver run.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    /// Iteration count after the update (1-based).
    pub iter: u64,
    /// Euclidean norm of the step `u_k - u_{k-1}`.
    pub gap_norm: f64,
    /// Preconditioner seminorm of the same step, when a seminorm hook is set.
    pub gap_seminorm: Option<f64>,
    /// Fixed-point residual `|| u_{k-1} - T(u_{k-1}) ||` available at this step.
    pub fp_residual: f64,
    /// Model objective from the extras hook.
    pub objective: Option<f64>,
    /// PSNR against a reference from the extras hook.
    pub psnr: Option<f64>,
    /// Cumulative wall time in milliseconds; recorded only on request since
    /// it breaks byte-for-byte reproducibility of written traces.
    pub elapsed_ms: Option<f64>,
}

/// Iteration history of one driver run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    rows: Vec<TraceRow>,
}

/// Numeric columns of a [`RunTrace`] addressable for series extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceField {
    GapNorm,
    GapSeminorm,
    FpResidual,
    Objective,
    Psnr,
}

impl RunTrace {
    /// Wraps rows, requiring strictly increasing iteration numbers.
    pub fn from_rows(rows: Vec<TraceRow>) -> Result<RunTrace, DriverError> {
        for pair in rows.windows(2) {
            if pair[1].iter <= pair[0].iter {
                return Err(DriverError::BadTrace(format!(
                    "iteration numbers must increase, got {} then {}",
                    pair[0].iter, pair[1].iter
                )));
            }
        }
        Ok(RunTrace { rows })
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// `(iter, value)` pairs for rows where `field` is present.
    pub fn series(&self, field: TraceField) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter_map(|r| {
                let v = match field {
                    TraceField::GapNorm => Some(r.gap_norm),
                    TraceField::GapSeminorm => r.gap_seminorm,
                    TraceField::FpResidual => Some(r.fp_residual),
                    TraceField::Objective => r.objective,
                    TraceField::Psnr => r.psnr,
                };
                v.map(|v| (r.iter, v))
            })
            .collect()
    }

    /// Writes the trace as CSV. Missing optional values become empty cells,
    /// so a run without timing serializes to identical bytes every time.
    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(
            w,
            "iter,gap_norm,gap_seminorm,fp_residual,objective,psnr,elapsed_ms"
        )?;
        let mut line = String::new();
        for r in &self.rows {
            line.clear();
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let _ = write!(
                line,
                "{},{},{},{},{},{},{}",
                r.iter,
                r.gap_norm,
                opt(r.gap_seminorm),
                r.fp_residual,
                opt(r.objective),
                opt(r.psnr),
                opt(r.elapsed_ms)
            );
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Optional per-iteration values from the caller.
#[derive(Default)]
pub struct Extras {
    pub objective: Option<f64>,
    pub psnr: Option<f64>,
}

/// Instrumentation and stopping control for the drivers.
pub struct IterHooks<'a, P> {
    /// Seminorm used for the `gap_seminorm` column.
    pub seminorm: Option<Box<dyn Fn(&P) -> f64 + 'a>>,
    /// Per-iterate extra columns (objective, PSNR).
    pub extras: Option<Box<dyn Fn(u64, &P) -> Extras + 'a>>,
    /// Record every `stride`-th iteration (the final one is always kept).
    pub stride: u64,
    /// Stop early once the fixed-point residual drops to this value.
    pub stop_fp_tol: Option<f64>,
    /// Record cumulative wall time per row; off by default because it makes
    /// trace bytes run-dependent.
    pub record_timing: bool,
}

impl<'a, P> Default for IterHooks<'a, P> {
    fn default() -> Self {
        IterHooks {
            seminorm: None,
            extras: None,
            stride: 1,
            stop_fp_tol: None,
            record_timing: false,
        }
    }
}

pub(crate) struct Recorder<'h, 'a, P> {
    hooks: &'h IterHooks<'a, P>,
    pub(crate) rows: Vec<TraceRow>,
    start: Instant,
}

impl<'h, 'a, P> Recorder<'h, 'a, P> {
    pub(crate) fn new(hooks: &'h IterHooks<'a, P>, n_iters: u64) -> Self {
        let stride = hooks.stride.max(1);
        Recorder {
            hooks,
            rows: Vec::with_capacity((n_iters / stride + 2) as usize),
            start: Instant::now(),
        }
    }

    pub(crate) fn record(&mut self, k: u64, n_iters: u64, u: &P, gap: &P, fp_residual: f64)
    where
        P: InnerSpace,
    {
        let stride = self.hooks.stride.max(1);
        if k % stride != 0 && k != n_iters {
            return;
        }
        let extras = self
            .hooks
            .extras
            .as_ref()
            .map(|f| f(k, u))
            .unwrap_or_default();
        self.rows.push(TraceRow {
            iter: k,
            gap_norm: gap.norm(),
            gap_seminorm: self.hooks.seminorm.as_ref().map(|f| f(gap)),
            fp_residual,
            objective: extras.objective,
            psnr: extras.psnr,
            elapsed_ms: self
                .hooks
                .record_timing
                .then(|| self.start.elapsed().as_secs_f64() * 1e3),
        });
    }
}

/// Relaxed fixed-point iteration
/// `u_k = (1 - w_k) u_{k-1} + w_k T(u_{k-1})`
/// with relaxation weights `w_k` drawn from `relax.value(k)` for
/// `k = 1..=n_iters`. Returns the final iterate and the recorded trace.
pub fn ppp_iterate<P: InnerSpace>(
    t: impl Fn(&P) -> P,
    x0: &P,
    relax: &Schedule,
    n_iters: u64,
    hooks: &IterHooks<P>,
) -> Result<(P, RunTrace), DriverError> {
    assert_eq!(relax.role(), ScheduleRole::Relaxation, "wrong schedule role");
    let mut u = x0.clone();
    let mut rec = Recorder::new(hooks, n_iters);
    for k in 1..=n_iters {
        let tu = t(&u);
        let fp_residual = u.dist(&tu);
        let w = relax.value(k);
        let next = P::lincomb(1.0 - w, &u, w, &tu);
        if !next.all_finite() {
            return Err(DriverError::Diverged { iter: k });
        }
        let gap = P::sub(&next, &u);
        u = next;
        rec.record(k, n_iters, &u, &gap, fp_residual);
        if hooks.stop_fp_tol.is_some_and(|tol| fp_residual <= tol) {
            break;
        }
    }
    Ok((u, RunTrace::from_rows(rec.rows)?))
}

/// Anchored fixed-point iteration
/// `u_k = mu_k a + (1 - mu_k) T(u_{k-1})`
/// with anchoring weights `mu_k = mu.value(k)` for `k = 1..=n_iters`.
/// Converges to the fixed point of `T` nearest the anchor `a` (in the
/// preconditioner geometry when `T` stems from one).
pub fn hppp_iterate<P: InnerSpace>(
    t: impl Fn(&P) -> P,
    anchor: &P,
    x0: &P,
    mu: &Schedule,
    n_iters: u64,
    hooks: &IterHooks<P>,
) -> Result<(P, RunTrace), DriverError> {
    assert_eq!(mu.role(), ScheduleRole::Anchor, "wrong schedule role");
    let mut u = x0.clone();
    let mut rec = Recorder::new(hooks, n_iters);
    for k in 1..=n_iters {
        let tu = t(&u);
        let fp_residual = u.dist(&tu);
        let m = mu.value(k);
        let next = P::lincomb(m, anchor, 1.0 - m, &tu);
        if !next.all_finite() {
            return Err(DriverError::Diverged { iter: k });
        }
        let gap = P::sub(&next, &u);
        u = next;
        rec.record(k, n_iters, &u, &gap, fp_residual);
        if hooks.stop_fp_tol.is_some_and(|tol| fp_residual <= tol) {
            break;
        }
    }
    Ok((u, RunTrace::from_rows(rec.rows)?))
}

/// Least-squares fit of `ln(value) = slope * ln(iter) + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub n_points: usize,
}

/// Fits a power-law decay rate over the window `k_min..=k_max` (both at
/// least 1). Nonpositive and non-finite samples carry no log information
/// and are skipped; at least two usable samples are required.
pub fn rate_fit(points: &[(u64, f64)], k_min: u64, k_max: u64) -> Result<RateFit, DriverError> {
    assert!(k_min >= 1 && k_min <= k_max, "bad rate-fit window");
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(k, v)| k >= k_min && k <= k_max && v > 0.0 && v.is_finite())
        .map(|&(k, v)| ((k as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(DriverError::RateFitInsufficient { found: pts.len() });
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(DriverError::BadTrace(
            "rate-fit window has no spread in iteration index".into(),
        ));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Ok(RateFit {
        slope,
        intercept,
        n_points: pts.len(),
    })
}
