//! Runtime verification suites built on brute-force oracles that are kept
//! deliberately independent of the fast implementations: grid-search scalar
//! proximal maps, dense normal-equations solves, operator-identity probes,
//! nonexpansiveness sweeps, solver equivalences, and decay-rate fits.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::denoise::{check_denoiser_assumptions, Denoiser};
use crate::fixedpoint::{rate_fit, Schedule, ScheduleFamily, TraceField};
use crate::grared::{drs_oracle, grared_p3_seq, pnp_admm_oracle, GraredPoint, GraredProblem};
use crate::imaging::{
    add_wgn, convolve_adjoint, convolve_psf, div, grad, normal_image, synthetic_scene,
    uniform_image, ConvMode, DualField, Image, Mask, Psf, PsfKind,
};
use crate::precond::{check_mfne, estimate_norm, GradOp, Point, Preconditioner, SaddleProblem};
use crate::prox::{moreau_residual, project_dual_ball, DeblurProx, InpaintProx};
use crate::restore::{preset, run_preset, RestoreError};
use crate::seed::derive;
use crate::space::{InnerSpace, PrimalDual};
use crate::toy::{
    toy_prox_f, toy_prox_fstar, toy_prox_g, toy_prox_gstar, toy_problem, toy_run, ToyAlgo,
    ToyConfig,
};

/// Brute-force scalar proximal map: minimizes
/// `f(z) + (z - point)^2 / (2 * step)` over `[lo, hi]` by iterated grid
/// refinement. Slow but free of any closed-form knowledge, so it can judge
/// the analytic maps. Infinite `f` values model constraints. The argmin is
/// only localized to about the square root of machine epsilon, since the
/// objective is flat to within rounding on that scale around the minimum.
pub fn brute_prox_1d(f: impl Fn(f64) -> f64, point: f64, step: f64, lo: f64, hi: f64) -> f64 {
    assert!(step > 0.0, "prox step must be positive");
    assert!(lo < hi, "empty search interval");
    let objective = |z: f64| f(z) + (z - point) * (z - point) / (2.0 * step);
    let n = 800usize;
    let (mut a, mut b) = (lo, hi);
    let mut best = a;
    for _ in 0..6 {
        let h = (b - a) / n as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..=n {
            let z = a + h * i as f64;
            let v = objective(z);
            if v < best_val {
                best_val = v;
                best = z;
            }
        }
        a = (best - 2.0 * h).max(lo);
        b = (best + 2.0 * h).min(hi);
    }
    best
}

/// Gaussian elimination with partial pivoting. Rows of `m` are equations.
fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty pivot range");
        m.swap(col, pivot);
        b.swap(col, pivot);
        let diag = m[col][col];
        assert!(diag.abs() > 1e-14, "singular system");
        for row in col + 1..n {
            let factor = m[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x
}

/// Reference blur-data proximal map: assembles the periodic convolution
/// matrix column by column through direct convolution and solves the normal
/// equations `(I + tau*lambda*K^T K) x = xt + tau*lambda*K^T y` densely.
pub fn dense_deblur_prox(
    observed: &Image,
    psf: &Psf,
    lambda: f64,
    xt: &Image,
    tau: f64,
) -> Image {
    let (w, h) = (xt.width(), xt.height());
    let n = w * h;
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = Image::zeros(w, h);
        e.pixels_mut()[j] = 1.0;
        cols.push(convolve_psf(&e, psf, ConvMode::Direct).pixels().to_vec());
    }
    let tl = tau * lambda;
    let mut m = vec![vec![0.0; n]; n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                acc += cols[r][i] * cols[c][i];
            }
            m[r][c] = tl * acc;
        }
        m[r][r] += 1.0;
    }
    let y = observed.pixels();
    let mut rhs = xt.pixels().to_vec();
    for (r, col) in cols.iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..n {
            acc += col[i] * y[i];
        }
        rhs[r] += tl * acc;
    }
    Image::from_vec(w, h, gauss_solve(m, rhs)).expect("solution matches the grid")
}

/// One verified property with its worst measured value.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    /// Worst value observed, on the same scale as `bound`.
    pub measured: f64,
    /// Pass iff `measured <= bound`.
    pub bound: f64,
}

impl CheckItem {
    fn at_most(name: &str, measured: f64, bound: f64) -> CheckItem {
        CheckItem {
            name: name.to_string(),
            passed: measured <= bound,
            measured,
            bound,
        }
    }
}

/// Named property suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Adjoint,
    Mfne,
    Prox,
    Denoiser,
    DrsEquiv,
    Rate,
}

impl Suite {
    pub fn all() -> [Suite; 6] {
        [
            Suite::Adjoint,
            Suite::Mfne,
            Suite::Prox,
            Suite::Denoiser,
            Suite::DrsEquiv,
            Suite::Rate,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Adjoint => "adjoint",
            Suite::Mfne => "mfne",
            Suite::Prox => "prox",
            Suite::Denoiser => "denoiser",
            Suite::DrsEquiv => "drs-equiv",
            Suite::Rate => "rate",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Suite, String> {
        Suite::all()
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                format!(
                    "unknown suite {s:?}; valid suites: adjoint, mfne, prox, denoiser, \
                     drs-equiv, rate"
                )
            })
    }
}

/// Runs one property suite; every random draw derives from `seed`.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    match suite {
        Suite::Adjoint => adjoint_suite(seed),
        Suite::Mfne => mfne_suite(seed),
        Suite::Prox => prox_suite(seed),
        Suite::Denoiser => denoiser_suite(seed),
        Suite::DrsEquiv => drs_equiv_suite(seed),
        Suite::Rate => rate_suite(seed),
    }
}

fn rand_dual(w: usize, h: usize, seed: u64) -> DualField {
    DualField::new(
        normal_image(w, h, derive(seed, "dual-p1")),
        normal_image(w, h, derive(seed, "dual-p2")),
    )
}

fn adjoint_suite(seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    let shapes = [(4usize, 4usize), (8, 8), (33, 17)];

    let mut worst_grad: f64 = 0.0;
    for (si, &(w, h)) in shapes.iter().enumerate() {
        for i in 0..34 {
            let x = normal_image(w, h, derive(seed, &format!("adj-x-{si}-{i}")));
            let p = rand_dual(w, h, derive(seed, &format!("adj-p-{si}-{i}")));
            let lhs = grad(&x).dot(&p);
            let rhs = x.dot(&div(&p));
            worst_grad = worst_grad.max((lhs + rhs).abs());
        }
    }

    let psfs = [
        Psf::new(PsfKind::Gaussian { sigma: 1.6 })?,
        Psf::new(PsfKind::Uniform { size: 5 })?,
    ];
    let mut worst_conv: f64 = 0.0;
    for (si, &(w, h)) in shapes.iter().enumerate() {
        for (pi, psf) in psfs.iter().enumerate() {
            for mode in [ConvMode::Direct, ConvMode::Fft] {
                for i in 0..9 {
                    let tag = format!("conv-{si}-{pi}-{i}");
                    let x = normal_image(w, h, derive(seed, &format!("{tag}-x")));
                    let y = normal_image(w, h, derive(seed, &format!("{tag}-y")));
                    let lhs = convolve_psf(&x, psf, mode).dot(&y);
                    let rhs = x.dot(&convolve_adjoint(&y, psf, mode));
                    worst_conv = worst_conv.max((lhs - rhs).abs());
                }
            }
        }
    }

    let mut worst_ball: f64 = 0.0;
    for (bi, beta) in [5e-4, 0.01, 1.0, 3.0].into_iter().enumerate() {
        for i in 0..25 {
            let p = rand_dual(16, 16, derive(seed, &format!("ball-{bi}-{i}")));
            let once = project_dual_ball(&p, beta);
            let twice = project_dual_ball(&once, beta);
            worst_ball = worst_ball.max(twice.max_abs_diff(&once));
        }
    }

    let observed = uniform_image(8, 8, derive(seed, "nonexp-obs"));
    let psf = Psf::new(PsfKind::Gaussian { sigma: 1.6 })?;
    let dp = DeblurProx::new(&observed, &psf, 2.0);
    let mask = Mask::bernoulli(8, 8, 0.5, derive(seed, "nonexp-mask"))?;
    let ip = InpaintProx::new(&observed, mask.as_image(), 1.0);
    let taus = [0.3, 1.0, 2.2];
    let (mut worst_deblur, mut worst_inpaint, mut worst_proj, mut worst_scalar) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "nonexp-scalar"));
    for i in 0..100 {
        let tau = taus[i % taus.len()];
        let a = normal_image(8, 8, derive(seed, &format!("nonexp-a{i}")));
        let b = normal_image(8, 8, derive(seed, &format!("nonexp-b{i}")));
        worst_deblur = worst_deblur.max(dp.apply(&a, tau).dist(&dp.apply(&b, tau)) - a.dist(&b));
        worst_inpaint = worst_inpaint.max(ip.apply(&a, tau).dist(&ip.apply(&b, tau)) - a.dist(&b));
        let pa = rand_dual(8, 8, derive(seed, &format!("nonexp-pa{i}")));
        let pb = rand_dual(8, 8, derive(seed, &format!("nonexp-pb{i}")));
        worst_proj = worst_proj.max(
            project_dual_ball(&pa, 0.01).dist(&project_dual_ball(&pb, 0.01)) - pa.dist(&pb),
        );
        let (sa, sb) = (
            rng.random::<f64>() * 10.0 - 5.0,
            rng.random::<f64>() * 10.0 - 5.0,
        );
        worst_scalar = worst_scalar
            .max((toy_prox_f(sa, tau) - toy_prox_f(sb, tau)).abs() - (sa - sb).abs());
        worst_scalar = worst_scalar
            .max((toy_prox_gstar(sa, tau) - toy_prox_gstar(sb, tau)).abs() - (sa - sb).abs());
    }

    Ok(vec![
        CheckItem::at_most("grad-div-adjoint", worst_grad, 1e-10),
        CheckItem::at_most("conv-adjoint", worst_conv, 1e-10),
        CheckItem::at_most("dual-ball-idempotent", worst_ball, 1e-12),
        CheckItem::at_most("deblur-prox-nonexpansive", worst_deblur, 1e-10),
        CheckItem::at_most("inpaint-prox-nonexpansive", worst_inpaint, 1e-10),
        CheckItem::at_most("dual-projection-nonexpansive", worst_proj, 1e-10),
        CheckItem::at_most("scalar-prox-nonexpansive", worst_scalar, 1e-10),
    ])
}

fn mfne_suite(seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    let scalar = toy_problem();
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "mfne-scalar"));
    let worst_scalar = check_mfne(
        &scalar,
        |_| {
            PrimalDual::new(
                rng.random::<f64>() * 16.0 - 8.0,
                rng.random::<f64>() * 16.0 - 8.0,
            )
        },
        100,
    );

    let clean = synthetic_scene(16);
    let psf = Psf::new(PsfKind::Gaussian { sigma: 1.6 })?;
    let blurred = convolve_psf(&clean, &psf, ConvMode::Fft);
    let observed = add_wgn(&blurred, 0.01, derive(seed, "mfne-noise"));
    let norm = estimate_norm(&GradOp, &normal_image(16, 16, derive(seed, "mfne-power")), 60);
    let step = 1.0 / norm;
    let pre = Preconditioner::new(GradOp, step, step, norm)?;
    let dp = DeblurProx::new(&observed, &psf, 2.0);
    let problem = SaddleProblem::new(
        pre,
        Box::new(move |xt: &Image, tau: f64| dp.apply(xt, tau)),
        Box::new(|q: &DualField, _s: f64| project_dual_ball(q, 5e-4)),
    );
    let worst_tv = check_mfne(
        &problem,
        |i| {
            Point::<GradOp>::new(
                normal_image(16, 16, derive(seed, &format!("mfne-x{i}"))),
                rand_dual(16, 16, derive(seed, &format!("mfne-y{i}"))),
            )
        },
        100,
    );

    Ok(vec![
        CheckItem::at_most("scalar-step-firmly-nonexpansive", worst_scalar, 1e-8),
        CheckItem::at_most("tv-deblur-step-firmly-nonexpansive", worst_tv, 1e-8),
    ])
}

fn prox_suite(seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    let f = |x: f64| (-x).max(0.0);
    let g = |z: f64| (1.0 - z).max(0.0);
    let gstar = |y: f64| {
        if (-1.0..=0.0).contains(&y) {
            y
        } else {
            f64::INFINITY
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "prox-scalar"));
    let mut worst_scalar: f64 = 0.0;
    for _ in 0..34 {
        let p = rng.random::<f64>() * 8.0 - 4.0;
        for step in [0.3, 1.0, 2.5] {
            worst_scalar =
                worst_scalar.max((toy_prox_f(p, step) - brute_prox_1d(f, p, step, -9.0, 9.0)).abs());
            worst_scalar =
                worst_scalar.max((toy_prox_g(p, step) - brute_prox_1d(g, p, step, -9.0, 9.0)).abs());
            worst_scalar = worst_scalar
                .max((toy_prox_gstar(p, step) - brute_prox_1d(gstar, p, step, -1.0, 0.0)).abs());
        }
    }

    let mut worst_moreau: f64 = 0.0;
    for _ in 0..34 {
        let z = rng.random::<f64>() * 6.0 - 3.0;
        for sigma in [0.4, 1.0, 3.0] {
            worst_moreau = worst_moreau.max(moreau_residual(
                |x: &f64, t: f64| toy_prox_f(*x, t),
                |y: &f64, t: f64| toy_prox_fstar(*y, t),
                &z,
                sigma,
            ));
            worst_moreau = worst_moreau.max(moreau_residual(
                |x: &f64, t: f64| toy_prox_g(*x, t),
                |y: &f64, t: f64| toy_prox_gstar(*y, t),
                &z,
                sigma,
            ));
        }
    }

    let mut worst_fft: f64 = 0.0;
    for i in 0..20u64 {
        let psf = if i % 2 == 0 {
            Psf::new(PsfKind::Gaussian {
                sigma: 0.5 + 0.02 * i as f64,
            })?
        } else {
            Psf::new(PsfKind::Uniform {
                size: if i % 4 == 1 { 3 } else { 5 },
            })?
        };
        let observed = uniform_image(8, 8, derive(seed, &format!("fft-obs{i}")));
        let xt = normal_image(8, 8, derive(seed, &format!("fft-xt{i}")));
        let tau = 0.1 + 1.9 * rng.random::<f64>();
        let lambda = 0.5 + 4.5 * rng.random::<f64>();
        let fast = DeblurProx::new(&observed, &psf, lambda).apply(&xt, tau);
        let dense = dense_deblur_prox(&observed, &psf, lambda, &xt, tau);
        worst_fft = worst_fft.max(fast.max_abs_diff(&dense));
    }

    Ok(vec![
        CheckItem::at_most("scalar-prox-grid-oracle", worst_scalar, 1e-6),
        CheckItem::at_most("moreau-identity", worst_moreau, 1e-10),
        CheckItem::at_most("fft-prox-dense-oracle", worst_fft, 1e-8),
    ])
}

fn denoiser_suite(seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    let mut items = Vec::new();
    let denoisers = [
        ("gaussian-conv", Denoiser::gaussian_conv(0.8)?),
        ("shrink", Denoiser::shrink(0.5)?),
    ];
    for (label, den) in &denoisers {
        let report = check_denoiser_assumptions(den, 16, derive(seed, label))?;
        items.push(CheckItem::at_most(
            &format!("{label}-homogeneity"),
            report.homogeneity_err,
            1e-10,
        ));
        items.push(CheckItem::at_most(
            &format!("{label}-symmetry"),
            report.symmetry_err,
            1e-10,
        ));
        items.push(CheckItem::at_most(
            &format!("{label}-residual-norm"),
            report.residual_norm,
            1.0 + 1e-6,
        ));
    }
    Ok(items)
}

fn drs_equiv_suite(seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    let den = Denoiser::gaussian_conv(0.8)?;
    let psf = Psf::new(PsfKind::Gaussian { sigma: 1.0 })?;
    let mut worst_split: f64 = 0.0;
    let mut worst_admm: f64 = 0.0;
    for i in 0..5u64 {
        let observed = uniform_image(16, 16, derive(seed, &format!("drs-obs{i}")));
        let dp = DeblurProx::new(&observed, &psf, 2.0);
        let w0 = normal_image(16, 16, derive(seed, &format!("drs-w{i}")));
        let problem = GraredProblem::new(|z: &Image, t: f64| dp.apply(z, t), &den, 1.0, 1.0)?;
        let x0 = GraredPoint::new(w0.clone(), Image::zeros(16, 16));
        let seq = grared_p3_seq(&problem, &x0, |_| 1.0, 50)?;
        let drs = drs_oracle(|z: &Image| dp.apply(z, 1.0), &den, &w0, 50)?;
        let admm = pnp_admm_oracle(|z: &Image| dp.apply(z, 1.0), &den, &w0, 50)?;
        for k in 0..drs.len() {
            worst_split = worst_split.max(seq[k].x.sub(&seq[k].y).max_abs_diff(&drs[k]));
            worst_admm = worst_admm.max(admm[k].max_abs_diff(&drs[k]));
        }
    }
    Ok(vec![
        CheckItem::at_most("splitting-matches-drs", worst_split, 1e-12),
        CheckItem::at_most("admm-matches-drs", worst_admm, 1e-10),
    ])
}

fn rate_suite(seed: u64) -> Result<Vec<CheckItem>, RestoreError> {
    let mu = Schedule::anchor(ScheduleFamily::MinTwoOverK)?;
    let run = toy_run(&ToyConfig {
        algo: ToyAlgo::Hppp {
            anchor: PrimalDual::new(12.0, 10.0),
            mu,
        },
        init: PrimalDual::new(-6.0, 6.0),
        n_iters: 2000,
    })?;
    let toy_fit = rate_fit(&run.trace.series(TraceField::GapNorm), 100, 1000)?;

    let mut p = preset("bernoulli50-grared-hp3")?;
    p.params.n_iters = 1001;
    p.params.mu = Some(mu);
    let clean = synthetic_scene(64);
    let r = run_preset(&p, &clean, derive(seed, "rate-inpaint"))?;
    let img_fit = rate_fit(&r.trace.series(TraceField::GapNorm), 100, 1000)?;

    Ok(vec![
        CheckItem::at_most("toy-gap-decay-slope", toy_fit.slope, -0.8),
        CheckItem::at_most("inpaint-gap-decay-slope", img_fit.slope, -0.8),
    ])
}
