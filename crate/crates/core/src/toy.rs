//! Exactly solvable one-dimensional saddle problem used to validate the
//! drivers: both proximal maps, the degenerate-step resolvent, its full
//! fixed-point set, and the closed-form anchored limit are all known, so
//! every convergence claim can be checked against analytic values.
//!
//! The problem couples `f(x) = max(-x, 0)` and `g*(y) = y` restricted to
//! `[-1, 0]` through the scalar identity, with unit primal and dual steps.
//! The fixed points of the resolvent step are exactly `(x, 0)` with
//! `x >= 1`, and the seminorm distance between points is `|dx - dy|`.

use std::cell::RefCell;
use std::io::{self, Write};

use crate::fixedpoint::{
    hppp_iterate, ppp_iterate, DriverError, Extras, IterHooks, RunTrace, Schedule,
};
use crate::precond::{Preconditioner, SaddleProblem, ScaledIdentity};
use crate::space::{InnerSpace, PrimalDual};

/// Primal-dual pair of the scalar problem.
pub type ToyPoint = PrimalDual<f64, f64>;

/// Proximal map of `f(x) = max(-x, 0)` with step `tau`.
pub fn toy_prox_f(xt: f64, tau: f64) -> f64 {
    assert!(tau > 0.0, "prox step must be positive");
    if xt >= 0.0 {
        xt
    } else if xt <= -tau {
        xt + tau
    } else {
        0.0
    }
}

/// Proximal map of `g*(y) = y + indicator([-1, 0])` with step `s`.
pub fn toy_prox_gstar(yt: f64, s: f64) -> f64 {
    assert!(s > 0.0, "prox step must be positive");
    (yt - s).clamp(-1.0, 0.0)
}

/// Proximal map of the primal partner `g(z) = max(1 - z, 0)` with step
/// `tau`, used to cross-check the conjugate pair through the Moreau
/// identity.
pub fn toy_prox_g(zt: f64, tau: f64) -> f64 {
    assert!(tau > 0.0, "prox step must be positive");
    if zt >= 1.0 {
        zt
    } else if zt <= 1.0 - tau {
        zt + tau
    } else {
        1.0
    }
}

/// Proximal map of `f*(y) = indicator([-1, 0])`: plain clamping.
pub fn toy_prox_fstar(yt: f64, _s: f64) -> f64 {
    yt.clamp(-1.0, 0.0)
}

/// One resolvent step of the scalar problem at unit steps, where the
/// preconditioner is degenerate.
pub fn toy_t(u: &ToyPoint) -> ToyPoint {
    let xp = toy_prox_f(u.x - u.y, 1.0);
    let yp = toy_prox_gstar(u.y + (2.0 * xp - u.x), 1.0);
    PrimalDual::new(xp, yp)
}

/// The scalar problem packaged for the generic machinery; its `cp_step`
/// reproduces [`toy_t`] bit for bit.
pub fn toy_problem() -> SaddleProblem<ScaledIdentity<f64>> {
    let pre = Preconditioner::new(ScaledIdentity::<f64>::new(1.0), 1.0, 1.0, 1.0)
        .expect("unit steps are admissible");
    SaddleProblem::new(
        pre,
        Box::new(|x: &f64, tau: f64| toy_prox_f(*x, tau)),
        Box::new(|y: &f64, s: f64| toy_prox_gstar(*y, s)),
    )
}

/// Preconditioner seminorm of the scalar problem: `|x - y|`.
pub fn toy_seminorm(u: &ToyPoint) -> f64 {
    (u.x - u.y).abs()
}

/// Seminorm distance between two points.
pub fn toy_dist_m(u: &ToyPoint, v: &ToyPoint) -> f64 {
    toy_seminorm(&PrimalDual::sub(u, v))
}

/// Whether a point lies in the fixed-point set `{(x, 0) : x >= 1}` up to
/// `tol` in each coordinate.
pub fn toy_in_fixed_set(u: &ToyPoint, tol: f64) -> bool {
    u.x >= 1.0 - tol && u.y.abs() <= tol
}

/// Closed-form limit of the anchored iteration: the seminorm projection of
/// the anchor onto the fixed-point set.
pub fn toy_limit(anchor: &ToyPoint) -> ToyPoint {
    let z = anchor.x - anchor.y;
    PrimalDual::new(if z <= 1.0 { 1.0 } else { z }, 0.0)
}

/// Which driver runs the scalar problem.
#[derive(Clone, Debug)]
pub enum ToyAlgo {
    /// Relaxed iteration with the given relaxation schedule.
    Ppp { relax: Schedule },
    /// Anchored iteration with the given anchor and weight schedule.
    Hppp { anchor: ToyPoint, mu: Schedule },
}

/// A scalar-problem run request.
#[derive(Clone, Debug)]
pub struct ToyConfig {
    pub algo: ToyAlgo,
    pub init: ToyPoint,
    pub n_iters: u64,
}

/// Results of a scalar-problem run.
pub struct ToyRun {
    pub final_point: ToyPoint,
    /// Every iterate, starting with `(0, init)`.
    pub trajectory: Vec<(u64, ToyPoint)>,
    pub trace: RunTrace,
    /// Analytic limit, known for the anchored driver.
    pub limit_claim: Option<ToyPoint>,
}

/// Runs the scalar problem through the generic drivers, recording the full
/// trajectory.
pub fn toy_run(config: &ToyConfig) -> Result<ToyRun, DriverError> {
    let traj = RefCell::new(vec![(0u64, config.init.clone())]);
    let hooks = IterHooks {
        seminorm: Some(Box::new(toy_seminorm)),
        extras: Some(Box::new(|k, u: &ToyPoint| {
            traj.borrow_mut().push((k, u.clone()));
            Extras::default()
        })),
        ..IterHooks::default()
    };
    let (final_point, trace, limit_claim) = match &config.algo {
        ToyAlgo::Ppp { relax } => {
            let (p, t) = ppp_iterate(toy_t, &config.init, relax, config.n_iters, &hooks)?;
            (p, t, None)
        }
        ToyAlgo::Hppp { anchor, mu } => {
            let (p, t) = hppp_iterate(toy_t, anchor, &config.init, mu, config.n_iters, &hooks)?;
            (p, t, Some(toy_limit(anchor)))
        }
    };
    drop(hooks);
    Ok(ToyRun {
        final_point,
        trajectory: traj.into_inner(),
        trace,
        limit_claim,
    })
}

/// Distances from each trajectory point to a target, under a caller-chosen
/// metric, as `(iter, distance)` pairs.
pub fn distance_series(
    traj: &[(u64, ToyPoint)],
    target: &ToyPoint,
    metric: impl Fn(&ToyPoint, &ToyPoint) -> f64,
) -> Vec<(u64, f64)> {
    traj.iter().map(|(k, u)| (*k, metric(u, target))).collect()
}

/// Writes a trajectory as `iter,x,y` CSV.
pub fn write_trajectory_csv(
    w: &mut dyn Write,
    traj: &[(u64, ToyPoint)],
) -> io::Result<()> {
    writeln!(w, "iter,x,y")?;
    for (k, u) in traj {
        writeln!(w, "{},{},{}", k, u.x, u.y)?;
    }
    Ok(())
}
