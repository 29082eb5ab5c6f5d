//! Splitting iterations that pair a data-fit proximal step with a plug-in
//! denoiser acting through its residual on the dual variable.
//!
//! The coupling operator is the identity, so the step-size product `tau * s`
//! is capped at one; equality is the degenerate regime where the induced
//! quadratic form is only a seminorm. With unit steps and unit relaxation
//! the relaxed variant reduces to Douglas-Rachford splitting in the
//! difference variable `x - y`; oracles for that recursion and for its ADMM
//! rearrangement live here so the reduction can be tested directly.

use crate::denoise::{DenoiseError, Denoiser};
use crate::fixedpoint::{DriverError, IterHooks, Recorder, RunTrace, Schedule, ScheduleRole};
use crate::imaging::Image;
use crate::space::{InnerSpace, PrimalDual};
use thiserror::Error;

/// Primal-dual iterate for the denoiser-coupled problem.
pub type GraredPoint = PrimalDual<Image, Image>;

#[derive(Debug, Error)]
pub enum GraredError {
    #[error("step sizes tau={tau}, s={s} violate tau * s <= 1")]
    BadSteps { tau: f64, s: f64 },
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Driver(#[from] DriverError),
}

/// Data-fit proximal map plus denoiser, with primal step `tau` and dual
/// step `s`.
///
/// The prox closure receives the shifted point and the step size, and must
/// return the proximal point of the data term at that step.
pub struct GraredProblem<'a> {
    prox_data: Box<dyn Fn(&Image, f64) -> Image + 'a>,
    denoiser: &'a Denoiser,
    tau: f64,
    s: f64,
}

impl<'a> GraredProblem<'a> {
    /// Builds the problem, rejecting step sizes with `tau * s > 1` (up to a
    /// small tolerance for products intended to hit one exactly).
    pub fn new(
        prox_data: impl Fn(&Image, f64) -> Image + 'a,
        denoiser: &'a Denoiser,
        tau: f64,
        s: f64,
    ) -> Result<GraredProblem<'a>, GraredError> {
        let ok = tau.is_finite() && s.is_finite() && tau > 0.0 && s > 0.0 && tau * s <= 1.0 + 1e-9;
        if !ok {
            return Err(GraredError::BadSteps { tau, s });
        }
        Ok(GraredProblem {
            prox_data: Box::new(prox_data),
            denoiser,
            tau,
            s,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// One unanchored step: the data-prox output `d` evaluated at
    /// `x - tau * y`, and the denoiser residual `v` of `y + s * (2d - x)`.
    fn step_parts(&self, u: &GraredPoint) -> Result<(Image, Image), DenoiseError> {
        let shifted = Image::lincomb(1.0, &u.x, -self.tau, &u.y);
        let d = (self.prox_data)(&shifted, self.tau);
        let reflected = Image::lincomb(2.0, &d, -1.0, &u.x);
        let arg = Image::lincomb(1.0, &u.y, self.s, &reflected);
        let v = self.denoiser.residual(&arg)?;
        Ok((d, v))
    }

    /// Seminorm induced by the step-size preconditioner,
    /// `sqrt((1/tau) |wx|^2 - 2 <wx, wy> + (1/s) |wy|^2)`, with the
    /// quadratic form clamped at zero against roundoff.
    pub fn seminorm(&self, w: &GraredPoint) -> f64 {
        let q = w.x.dot(&w.x) / self.tau - 2.0 * w.x.dot(&w.y) + w.y.dot(&w.y) / self.s;
        q.max(0.0).sqrt()
    }
}

fn fp_distance(u: &GraredPoint, d: &Image, v: &Image) -> f64 {
    let ex = u.x.dist(d);
    let ey = u.y.dist(v);
    (ex * ex + ey * ey).sqrt()
}

/// Anchored iteration. At step `k` (starting from 1) the primal update
/// blends the data-prox output with the primal anchor using weight
/// `mu.value(k - 1)`, while the dual update blends the denoiser residual
/// with the dual anchor using weight `mu.value(k)`. The staggering keeps
/// both components on the same anchoring weight as seen by the combined
/// update that produced them.
pub fn grared_hp3(
    problem: &GraredProblem,
    anchor: &GraredPoint,
    x0: &GraredPoint,
    mu: &Schedule,
    n_iters: u64,
    hooks: &IterHooks<GraredPoint>,
) -> Result<(GraredPoint, RunTrace), GraredError> {
    assert_eq!(mu.role(), ScheduleRole::Anchor, "wrong schedule role");
    let mut u = x0.clone();
    let mut rec = Recorder::new(hooks, n_iters);
    for k in 1..=n_iters {
        let (d, v) = problem.step_parts(&u)?;
        let fp_residual = fp_distance(&u, &d, &v);
        let mk = mu.value(k - 1);
        let mk1 = mu.value(k);
        let next = GraredPoint::new(
            Image::lincomb(mk, &anchor.x, 1.0 - mk, &d),
            Image::lincomb(mk1, &anchor.y, 1.0 - mk1, &v),
        );
        if !next.all_finite() {
            return Err(DriverError::Diverged { iter: k }.into());
        }
        let gap = GraredPoint::sub(&next, &u);
        u = next;
        rec.record(k, n_iters, &u, &gap, fp_residual);
        if hooks.stop_fp_tol.is_some_and(|tol| fp_residual <= tol) {
            break;
        }
    }
    Ok((u, RunTrace::from_rows(rec.rows)?))
}

/// Relaxed iteration. At step `k` (starting from 1) both components blend
/// the unanchored update with the previous iterate using weight
/// `relax.value(k)`.
pub fn grared_p3(
    problem: &GraredProblem,
    x0: &GraredPoint,
    relax: &Schedule,
    n_iters: u64,
    hooks: &IterHooks<GraredPoint>,
) -> Result<(GraredPoint, RunTrace), GraredError> {
    assert_eq!(relax.role(), ScheduleRole::Relaxation, "wrong schedule role");
    let mut u = x0.clone();
    let mut rec = Recorder::new(hooks, n_iters);
    for k in 1..=n_iters {
        let (d, v) = problem.step_parts(&u)?;
        let fp_residual = fp_distance(&u, &d, &v);
        let w = relax.value(k);
        let next = GraredPoint::new(
            Image::lincomb(w, &d, 1.0 - w, &u.x),
            Image::lincomb(w, &v, 1.0 - w, &u.y),
        );
        if !next.all_finite() {
            return Err(DriverError::Diverged { iter: k }.into());
        }
        let gap = GraredPoint::sub(&next, &u);
        u = next;
        rec.record(k, n_iters, &u, &gap, fp_residual);
        if hooks.stop_fp_tol.is_some_and(|tol| fp_residual <= tol) {
            break;
        }
    }
    Ok((u, RunTrace::from_rows(rec.rows)?))
}

/// Runs the relaxed iteration with per-step weights from `weight` and
/// returns every iterate, starting with the initial point. Used by the
/// splitting-equivalence checks.
pub(crate) fn grared_p3_seq(
    problem: &GraredProblem,
    x0: &GraredPoint,
    weight: impl Fn(u64) -> f64,
    n_iters: u64,
) -> Result<Vec<GraredPoint>, GraredError> {
    let mut seq = Vec::with_capacity(n_iters as usize + 1);
    seq.push(x0.clone());
    let mut u = x0.clone();
    for k in 1..=n_iters {
        let (d, v) = problem.step_parts(&u)?;
        let w = weight(k);
        let next = GraredPoint::new(
            Image::lincomb(w, &d, 1.0 - w, &u.x),
            Image::lincomb(w, &v, 1.0 - w, &u.y),
        );
        if !next.all_finite() {
            return Err(DriverError::Diverged { iter: k }.into());
        }
        u = next;
        seq.push(u.clone());
    }
    Ok(seq)
}

/// Douglas-Rachford recursion in the difference variable:
/// `w <- w + D(2 prox(w) - w) - prox(w)`. Returns all iterates including
/// the initial one.
pub fn drs_oracle(
    prox: impl Fn(&Image) -> Image,
    denoiser: &Denoiser,
    w0: &Image,
    n_iters: u64,
) -> Result<Vec<Image>, GraredError> {
    let mut seq = Vec::with_capacity(n_iters as usize + 1);
    let mut w = w0.clone();
    seq.push(w.clone());
    for k in 1..=n_iters {
        let p = prox(&w);
        let reflected = Image::lincomb(2.0, &p, -1.0, &w);
        let dw = denoiser.apply(&reflected)?;
        let partial = Image::lincomb(1.0, &w, 1.0, &dw);
        w = Image::lincomb(1.0, &partial, -1.0, &p);
        if !w.all_finite() {
            return Err(DriverError::Diverged { iter: k }.into());
        }
        seq.push(w.clone());
    }
    Ok(seq)
}

/// ADMM rearrangement of the same splitting: the denoiser plays one block,
/// the prox the other, with a scaled multiplier in between. Returns the
/// recombined `prox-output + multiplier` sequence, which reproduces the
/// Douglas-Rachford iterates up to roundoff.
pub fn pnp_admm_oracle(
    prox: impl Fn(&Image) -> Image,
    denoiser: &Denoiser,
    w0: &Image,
    n_iters: u64,
) -> Result<Vec<Image>, GraredError> {
    let mut seq = Vec::with_capacity(n_iters as usize + 1);
    seq.push(w0.clone());
    let mut v = prox(w0);
    let mut mult = Image::lincomb(1.0, w0, -1.0, &v);
    for k in 1..=n_iters {
        let z = denoiser.apply(&Image::lincomb(1.0, &v, -1.0, &mult))?;
        let vnew = prox(&Image::lincomb(1.0, &z, 1.0, &mult));
        let partial = Image::lincomb(1.0, &mult, 1.0, &z);
        mult = Image::lincomb(1.0, &partial, -1.0, &vnew);
        v = vnew;
        let w = Image::lincomb(1.0, &v, 1.0, &mult);
        if !w.all_finite() {
            return Err(DriverError::Diverged { iter: k }.into());
        }
        seq.push(w);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{normal_image, uniform_image};

    fn quad_prox<'a>(target: &'a Image, lam: f64) -> impl Fn(&Image, f64) -> Image + 'a {
        move |z: &Image, step: f64| {
            let t = step * lam;
            z.zip(target, |zi, ti| (zi + t * ti) / (1.0 + t))
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let den = Denoiser::shrink(0.5).unwrap();
        assert!(matches!(
            GraredProblem::new(|z: &Image, _| z.clone(), &den, 2.0, 1.0),
            Err(GraredError::BadSteps { .. })
        ));
        assert!(matches!(
            GraredProblem::new(|z: &Image, _| z.clone(), &den, -1.0, 0.5),
            Err(GraredError::BadSteps { .. })
        ));
        assert!(GraredProblem::new(|z: &Image, _| z.clone(), &den, 10.0, 0.1).is_ok());
        assert!(GraredProblem::new(|z: &Image, _| z.clone(), &den, 1.0, 1.0).is_ok());
    }

    #[test]
    fn seminorm_hand_value_and_kernel_direction() {
        let den = Denoiser::shrink(0.5).unwrap();
        let prob = GraredProblem::new(|z: &Image, _| z.clone(), &den, 0.5, 2.0).unwrap();
        let w = GraredPoint::new(
            Image::from_vec(1, 1, vec![2.0]).unwrap(),
            Image::from_vec(1, 1, vec![3.0]).unwrap(),
        );
        // 2 * 4 - 2 * 6 + 0.5 * 9 = 0.5
        assert!((prob.seminorm(&w) - 0.5f64.sqrt()).abs() < 1e-14);

        let prob10 = GraredProblem::new(|z: &Image, _| z.clone(), &den, 10.0, 0.1).unwrap();
        let wx = normal_image(8, 8, 5);
        let wy = wx.map(|v| v / 10.0);
        let w = GraredPoint::new(wx.clone(), wy);
        assert!(prob10.seminorm(&w) < 1e-6);
        let off_kernel = GraredPoint::new(wx, Image::zeros(8, 8));
        assert!(prob10.seminorm(&off_kernel) > 0.5);
    }

    #[test]
    fn unit_step_unit_relaxation_matches_difference_recursion() {
        let den = Denoiser::gaussian_conv(0.8).unwrap();
        let target = uniform_image(8, 8, 11);
        let prob = GraredProblem::new(quad_prox(&target, 0.7), &den, 1.0, 1.0).unwrap();
        let w0 = normal_image(8, 8, 3);
        let x0 = GraredPoint::new(w0.clone(), Image::zeros(8, 8));
        let seq = grared_p3_seq(&prob, &x0, |_| 1.0, 20).unwrap();
        let qp = quad_prox(&target, 0.7);
        let drs = drs_oracle(|w| qp(w, 1.0), &den, &w0, 20).unwrap();
        assert_eq!(seq.len(), drs.len());
        for (u, w) in seq.iter().zip(&drs) {
            let diff = Image::lincomb(1.0, &u.x, -1.0, &u.y);
            assert!(diff.max_abs_diff(w) <= 1e-12);
        }
    }

    #[test]
    fn admm_rearrangement_matches_difference_recursion() {
        let den = Denoiser::gaussian_conv(0.8).unwrap();
        let target = uniform_image(8, 8, 21);
        let qp = quad_prox(&target, 1.3);
        let w0 = normal_image(8, 8, 7);
        let drs = drs_oracle(|w| qp(w, 1.0), &den, &w0, 20).unwrap();
        let admm = pnp_admm_oracle(|w| qp(w, 1.0), &den, &w0, 20).unwrap();
        assert_eq!(drs.len(), admm.len());
        for (a, b) in drs.iter().zip(&admm) {
            assert!(a.max_abs_diff(b) <= 1e-10);
        }
    }

    #[test]
    fn anchored_step_blends_parts_with_staggered_weights() {
        let den = Denoiser::gaussian_conv(0.7).unwrap();
        let target = uniform_image(6, 6, 31);
        let prob = GraredProblem::new(quad_prox(&target, 2.0), &den, 10.0, 0.1).unwrap();
        let anchor = GraredPoint::new(uniform_image(6, 6, 32), Image::zeros(6, 6));
        let x0 = GraredPoint::new(normal_image(6, 6, 33), normal_image(6, 6, 34));
        let mu = Schedule::anchor("inv-shift:1:2".parse().unwrap()).unwrap();

        let (d, v) = prob.step_parts(&x0).unwrap();
        let mk = mu.value(0);
        let mk1 = mu.value(1);
        let expected = GraredPoint::new(
            Image::lincomb(mk, &anchor.x, 1.0 - mk, &d),
            Image::lincomb(mk1, &anchor.y, 1.0 - mk1, &v),
        );

        let hooks = IterHooks::default();
        let (got, trace) = grared_hp3(&prob, &anchor, &x0, &mu, 1, &hooks).unwrap();
        assert_eq!(got.x.max_abs_diff(&expected.x), 0.0);
        assert_eq!(got.y.max_abs_diff(&expected.y), 0.0);
        assert_eq!(trace.rows().len(), 1);
        assert!(trace.last().unwrap().fp_residual > 0.0);
    }

    #[test]
    fn relaxed_step_blends_with_previous_iterate() {
        let den = Denoiser::shrink(0.9).unwrap();
        let target = uniform_image(6, 6, 41);
        let prob = GraredProblem::new(quad_prox(&target, 2.0), &den, 1.0, 1.0).unwrap();
        let x0 = GraredPoint::new(normal_image(6, 6, 43), normal_image(6, 6, 44));
        let relax = Schedule::relaxation("const:0.2".parse().unwrap()).unwrap();

        let (d, v) = prob.step_parts(&x0).unwrap();
        let expected = GraredPoint::new(
            Image::lincomb(0.2, &d, 0.8, &x0.x),
            Image::lincomb(0.2, &v, 0.8, &x0.y),
        );

        let hooks = IterHooks::default();
        let (got, _) = grared_p3(&prob, &x0, &relax, 1, &hooks).unwrap();
        assert_eq!(got.x.max_abs_diff(&expected.x), 0.0);
        assert_eq!(got.y.max_abs_diff(&expected.y), 0.0);
    }

    #[test]
    fn divergence_is_reported_with_iteration() {
        let den = Denoiser::shrink(1.0).unwrap();
        let prob = GraredProblem::new(|z: &Image, _| z.map(|v| v * 1e200), &den, 1.0, 1.0).unwrap();
        let x0 = GraredPoint::new(uniform_image(4, 4, 51), Image::zeros(4, 4));
        let relax = Schedule::relaxation("const:1.0".parse().unwrap()).unwrap();
        let hooks = IterHooks::default();
        match grared_p3(&prob, &x0, &relax, 10, &hooks) {
            Err(GraredError::Driver(DriverError::Diverged { iter })) => assert!(iter <= 3),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn seminorm_hook_and_stride_are_respected() {
        let den = Denoiser::gaussian_conv(0.8).unwrap();
        let target = uniform_image(8, 8, 61);
        let prob = GraredProblem::new(quad_prox(&target, 1.0), &den, 1.0, 1.0).unwrap();
        let anchor = GraredPoint::new(target.clone(), Image::zeros(8, 8));
        let x0 = GraredPoint::new(normal_image(8, 8, 62), Image::zeros(8, 8));
        let mu = Schedule::anchor("inv-shift:1:2".parse().unwrap()).unwrap();
        let hooks = IterHooks {
            seminorm: Some(Box::new(|w: &GraredPoint| {
                let q = w.x.dot(&w.x) - 2.0 * w.x.dot(&w.y) + w.y.dot(&w.y);
                q.max(0.0).sqrt()
            })),
            stride: 4,
            ..IterHooks::default()
        };
        let (_, trace) = grared_hp3(&prob, &anchor, &x0, &mu, 10, &hooks).unwrap();
        let iters: Vec<u64> = trace.rows().iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![4, 8, 10]);
        assert!(trace.rows().iter().all(|r| r.gap_seminorm.is_some()));
    }
}
