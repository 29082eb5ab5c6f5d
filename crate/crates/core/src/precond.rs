//! The preconditioned primal-dual splitting: coupling operators, the
//! (possibly degenerate) block preconditioner, the resolvent-type step it
//! induces, operator-norm estimation, and the firm-nonexpansiveness probe
//! in the preconditioner seminorm.

use thiserror::Error;

use crate::space::{InnerSpace, PrimalDual};

/// A bounded linear operator between inner-product spaces, with its adjoint.
pub trait LinearMap {
    type Domain: InnerSpace;
    type Codomain: InnerSpace;

    fn apply(&self, x: &Self::Domain) -> Self::Codomain;
    fn adjoint(&self, y: &Self::Codomain) -> Self::Domain;
}

/// `x -> factor * x` on any inner-product space.
#[derive(Clone, Copy, Debug)]
pub struct ScaledIdentity<S> {
    pub factor: f64,
    marker: std::marker::PhantomData<fn(S) -> S>,
}

impl<S> ScaledIdentity<S> {
    pub fn new(factor: f64) -> ScaledIdentity<S> {
        ScaledIdentity {
            factor,
            marker: std::marker::PhantomData,
        }
    }
}

impl<S: InnerSpace> LinearMap for ScaledIdentity<S> {
    type Domain = S;
    type Codomain = S;

    fn apply(&self, x: &S) -> S {
        S::lincomb(self.factor, x, 0.0, x)
    }

    fn adjoint(&self, y: &S) -> S {
        S::lincomb(self.factor, y, 0.0, y)
    }
}

/// Discrete image gradient as a coupling operator; the adjoint is the
/// negative divergence.
#[derive(Clone, Copy, Debug, Default)]
pub struct GradOp;

impl LinearMap for GradOp {
    type Domain = crate::imaging::Image;
    type Codomain = crate::imaging::DualField;

    fn apply(&self, x: &Self::Domain) -> Self::Codomain {
        crate::imaging::grad(x)
    }

    fn adjoint(&self, y: &Self::Codomain) -> Self::Domain {
        crate::imaging::div(y).map(|v| -v)
    }
}

/// Errors from preconditioner construction.
#[derive(Debug, Error)]
pub enum PrecondError {
    #[error("invalid step sizes: {0}")]
    BadSteps(String),
}

/// Block preconditioner
/// `M (x, y) = ((1/tau) x - K* y, -K x + (1/s) y)`
/// pairing primal step `tau` and dual step `s` with the coupling operator
/// `K`. Positive semidefinite iff `tau * s * ||K||^2 <= 1`, with equality
/// the degenerate case where the induced norm is only a seminorm.
pub struct Preconditioner<K: LinearMap> {
    op: K,
    tau: f64,
    s: f64,
}

pub type Point<K> =
    PrimalDual<<K as LinearMap>::Domain, <K as LinearMap>::Codomain>;

impl<K: LinearMap> Preconditioner<K> {
    /// Builds the preconditioner, rejecting step sizes that exceed the
    /// semidefiniteness bound for the supplied operator-norm value
    /// (a small tolerance absorbs rounding in norm estimates).
    pub fn new(op: K, tau: f64, s: f64, op_norm: f64) -> Result<Preconditioner<K>, PrecondError> {
        if !(tau > 0.0) || !(s > 0.0) || !tau.is_finite() || !s.is_finite() {
            return Err(PrecondError::BadSteps(format!(
                "steps must be positive and finite, got tau={tau}, s={s}"
            )));
        }
        if !(op_norm >= 0.0) || !op_norm.is_finite() {
            return Err(PrecondError::BadSteps(format!(
                "operator norm must be a finite nonnegative value, got {op_norm}"
            )));
        }
        let product = tau * s * op_norm * op_norm;
        if product > 1.0 + 1e-9 {
            return Err(PrecondError::BadSteps(format!(
                "tau * s * ||K||^2 = {product} exceeds 1; the preconditioner would be indefinite"
            )));
        }
        Ok(Preconditioner { op, tau, s })
    }

    /// Builds the preconditioner without the semidefiniteness gate. Some
    /// published parameter sets run outside the guaranteed regime; this
    /// constructor admits them explicitly.
    pub fn new_unchecked(op: K, tau: f64, s: f64) -> Result<Preconditioner<K>, PrecondError> {
        if !(tau > 0.0) || !(s > 0.0) || !tau.is_finite() || !s.is_finite() {
            return Err(PrecondError::BadSteps(format!(
                "steps must be positive and finite, got tau={tau}, s={s}"
            )));
        }
        Ok(Preconditioner { op, tau, s })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn op(&self) -> &K {
        &self.op
    }

    /// Applies the block preconditioner.
    pub fn apply_m(&self, u: &Point<K>) -> Point<K> {
        let kx = self.op.apply(&u.x);
        let kty = self.op.adjoint(&u.y);
        PrimalDual::new(
            <K::Domain>::lincomb(1.0 / self.tau, &u.x, -1.0, &kty),
            <K::Codomain>::lincomb(-1.0, &kx, 1.0 / self.s, &u.y),
        )
    }

    /// Raw quadratic form `<M u, u>`. May be slightly negative from rounding
    /// in the degenerate case; callers comparing energies must use this
    /// unclamped value.
    pub fn quad_form(&self, u: &Point<K>) -> f64 {
        self.apply_m(u).dot(u)
    }

    /// Seminorm induced by the preconditioner, clamping rounding-level
    /// negatives to zero.
    pub fn seminorm(&self, u: &Point<K>) -> f64 {
        self.quad_form(u).max(0.0).sqrt()
    }

    /// Whether the steps sit on the semidefiniteness boundary for the given
    /// operator norm, where the preconditioner has a nontrivial kernel.
    pub fn is_degenerate(&self, op_norm: f64) -> bool {
        (self.tau * self.s * op_norm * op_norm - 1.0).abs() <= 1e-6
    }
}

type ProxFn<S> = Box<dyn Fn(&S, f64) -> S>;

/// A convex-concave coupled problem
/// `min_x max_y f(x) + <K x, y> - g*(y)`
/// packaged as the two proximal maps and the preconditioned geometry that
/// together define one resolvent-type step.
pub struct SaddleProblem<K: LinearMap> {
    pre: Preconditioner<K>,
    prox_f: ProxFn<K::Domain>,
    prox_gstar: ProxFn<K::Codomain>,
}

impl<K: LinearMap> SaddleProblem<K> {
    /// Packages a problem. Both proximal closures receive `(point, step)`.
    pub fn new(
        pre: Preconditioner<K>,
        prox_f: ProxFn<K::Domain>,
        prox_gstar: ProxFn<K::Codomain>,
    ) -> SaddleProblem<K> {
        SaddleProblem {
            pre,
            prox_f,
            prox_gstar,
        }
    }

    pub fn preconditioner(&self) -> &Preconditioner<K> {
        &self.pre
    }

    /// One primal-dual step:
    /// `x+ = prox_f(x - tau K* y)`, then
    /// `y+ = prox_g*(y + s K (2 x+ - x))`.
    /// This is the resolvent of the problem's operator in the preconditioner
    /// metric, and is firmly nonexpansive in that (semi)norm.
    pub fn cp_step(&self, u: &Point<K>) -> Point<K> {
        let (tau, s) = (self.pre.tau, self.pre.s);
        let kty = self.pre.op.adjoint(&u.y);
        let x_next = (self.prox_f)(&<K::Domain>::lincomb(1.0, &u.x, -tau, &kty), tau);
        let reflected = <K::Domain>::lincomb(2.0, &x_next, -1.0, &u.x);
        let k_ref = self.pre.op.apply(&reflected);
        let y_next = (self.prox_gstar)(&<K::Codomain>::lincomb(1.0, &u.y, s, &k_ref), s);
        PrimalDual::new(x_next, y_next)
    }

    /// The anchored step written in its published componentwise form:
    /// the primal update blends the anchor into the prox output, and the
    /// dual update reconstructs the prox output from the blended primal
    /// before its own blend. Algebraically this equals
    /// `mu * anchor + (1 - mu) * cp_step(u)`; the two evaluation orders
    /// agree to rounding error, and the boundary weights 0 and 1 shortcut
    /// to exactly the plain step and exactly the anchor.
    pub fn cp_step_anchored(&self, u: &Point<K>, anchor: &Point<K>, mu: f64) -> Point<K> {
        assert!((0.0..=1.0).contains(&mu), "anchor weight must be in [0, 1]");
        if mu == 0.0 {
            return self.cp_step(u);
        }
        if mu == 1.0 {
            return anchor.clone();
        }
        let (tau, s) = (self.pre.tau, self.pre.s);
        let kty = self.pre.op.adjoint(&u.y);
        let d = (self.prox_f)(&<K::Domain>::lincomb(1.0, &u.x, -tau, &kty), tau);
        let x_next = <K::Domain>::lincomb(mu, &anchor.x, 1.0 - mu, &d);
        // Recover d from the blended primal, as the published form writes it.
        let shifted = <K::Domain>::lincomb(1.0, &x_next, -mu, &anchor.x);
        let k_shifted = self.pre.op.apply(&shifted);
        let kx = self.pre.op.apply(&u.x);
        let arg_partial =
            <K::Codomain>::lincomb(2.0 * s / (1.0 - mu), &k_shifted, -s, &kx);
        let arg = <K::Codomain>::lincomb(1.0, &arg_partial, 1.0, &u.y);
        let v = (self.prox_gstar)(&arg, s);
        let y_next = <K::Codomain>::lincomb(mu, &anchor.y, 1.0 - mu, &v);
        PrimalDual::new(x_next, y_next)
    }
}

/// Operator-norm estimate by power iteration on `K* K`, started from `v0`.
/// Returns the Rayleigh-quotient root after `n_iters` sweeps; `v0` must be
/// nonzero (a zero or invariant-subspace start underestimates the norm).
pub fn estimate_norm<K: LinearMap>(op: &K, v0: &K::Domain, n_iters: usize) -> f64 {
    let mut v = v0.clone();
    let n0 = v.norm();
    assert!(n0 > 0.0, "power iteration needs a nonzero start");
    v = <K::Domain>::lincomb(1.0 / n0, &v, 0.0, &v);
    for _ in 0..n_iters {
        let w = op.apply(&v);
        let next = op.adjoint(&w);
        let n = next.norm();
        if n == 0.0 {
            return 0.0;
        }
        v = <K::Domain>::lincomb(1.0 / n, &next, 0.0, &next);
    }
    op.apply(&v).norm() / v.norm()
}

/// Largest violation of firm nonexpansiveness in the preconditioner
/// seminorm over sampled pairs:
/// `||Tu - Tv||_M^2 + ||(I-T)u - (I-T)v||_M^2 - ||u - v||_M^2`,
/// evaluated with raw quadratic forms. Nonpositive (up to rounding) for a
/// correctly assembled step, including the degenerate case.
pub fn check_mfne<K: LinearMap>(
    problem: &SaddleProblem<K>,
    mut sampler: impl FnMut(usize) -> Point<K>,
    n_pairs: usize,
) -> f64 {
    let pre = problem.preconditioner();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n_pairs {
        let u = sampler(2 * i);
        let v = sampler(2 * i + 1);
        let tu = problem.cp_step(&u);
        let tv = problem.cp_step(&v);
        let t_diff = PrimalDual::sub(&tu, &tv);
        let res_u = PrimalDual::sub(&u, &tu);
        let res_v = PrimalDual::sub(&v, &tv);
        let r_diff = PrimalDual::sub(&res_u, &res_v);
        let e = PrimalDual::sub(&u, &v);
        let violation = pre.quad_form(&t_diff) + pre.quad_form(&r_diff) - pre.quad_form(&e);
        worst = worst.max(violation);
    }
    worst
}
