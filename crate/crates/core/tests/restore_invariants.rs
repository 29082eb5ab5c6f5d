//! Solver-level invariants of the restoration presets: objective sanity for
//! the plain primal-dual run, equality of the componentwise anchored step
//! with the generic anchored driver, anchor and initialization studies, and
//! the near-identity deblurring sanity case.

use std::cell::RefCell;

use hppp_core::fixedpoint::{hppp_iterate, Extras, IterHooks, TraceField};
use hppp_core::imaging::{
    convolve_adjoint, convolve_psf, psnr, synthetic_scene, uniform_image, ConvMode, DualField,
    Image,
};
use hppp_core::precond::{GradOp, Point, Preconditioner, SaddleProblem};
use hppp_core::prox::{project_dual_ball, DeblurProx};
use hppp_core::restore::{
    anchor_study, degrade, init_robustness, run_preset, run_preset_with, study_anchor_images,
    tv_objective, RunOverrides, TaskKind,
};
use hppp_core::seed::derive;
use hppp_core::toy::{toy_run, ToyAlgo, ToyConfig};
use hppp_core::{preset, PrimalDual, Schedule, ScheduleFamily};

#[test]
fn plain_primal_dual_does_not_worsen_the_objective_endpoint() {
    let clean = synthetic_scene(64);
    let mut p = preset("gauss16-cp").unwrap();
    p.params.n_iters = 150;
    let seed = 31;
    let deg = degrade(&p.task, &clean, seed).unwrap();
    let start = tv_objective(&deg, &deg.observed, p.params.lambda, p.params.beta);
    let r = run_preset(&p, &clean, seed).unwrap();
    let series = r.trace.series(TraceField::Objective);
    assert_eq!(series.len(), 150);
    let end = series.last().unwrap().1;
    assert!(
        end <= start,
        "objective rose over the run: {start} -> {end}"
    );
}

#[test]
fn componentwise_anchored_step_tracks_the_generic_driver() {
    let clean = synthetic_scene(32);
    let task = TaskKind::DeblurGaussian {
        sigma: 1.6,
        noise: 0.01,
    };
    let seed = 5;
    let deg = degrade(&task, &clean, seed).unwrap();
    let psf = deg.psf.clone().unwrap();
    let (tau, s) = (0.57, 0.57);
    let pre = Preconditioner::new(GradOp, tau, s, 1.0 / 0.57).unwrap();
    let dp = DeblurProx::new(&deg.observed, &psf, 2.0);
    let problem = SaddleProblem::new(
        pre,
        Box::new(move |xt: &Image, t: f64| dp.apply(xt, t)),
        Box::new(|q: &DualField, _s: f64| project_dual_ball(q, 5e-4)),
    );
    let mu = Schedule::anchor(ScheduleFamily::InverseShift { c: 1.0, k0: 2.0 }).unwrap();
    let anchor = Point::<GradOp>::new(
        convolve_adjoint(&deg.observed, &psf, ConvMode::Fft),
        DualField::zeros(32, 32),
    );
    let u0 = Point::<GradOp>::new(deg.observed.clone(), DualField::zeros(32, 32));
    let n_iters = 30u64;

    let generic = RefCell::new(Vec::new());
    let hooks = IterHooks {
        extras: Some(Box::new(|_k: u64, u: &Point<GradOp>| {
            generic.borrow_mut().push(u.clone());
            Extras::default()
        })),
        ..IterHooks::default()
    };
    let t = |u: &Point<GradOp>| problem.cp_step(u);
    hppp_iterate(t, &anchor, &u0, &mu, n_iters, &hooks).unwrap();
    drop(hooks);
    let generic = generic.into_inner();
    assert_eq!(generic.len(), n_iters as usize);

    let mut u = u0;
    let mut worst: f64 = 0.0;
    for (k, expected) in (1..=n_iters).zip(&generic) {
        u = problem.cp_step_anchored(&u, &anchor, mu.value(k));
        worst = worst.max(u.x.max_abs_diff(&expected.x));
        worst = worst.max(u.y.max_abs_diff(&expected.y));
    }
    assert!(
        worst <= 1e-12,
        "componentwise and generic paths diverged by {worst}"
    );
}

#[test]
fn anchored_limits_ignore_initialization_on_toy_and_images() {
    // Scalar problem: different starts, one anchor.
    let mu = Schedule::anchor(ScheduleFamily::InverseShift { c: 1.0, k0: 2.0 }).unwrap();
    let inits = [
        PrimalDual::new(-6.0, 6.0),
        PrimalDual::new(3.0, -2.0),
        PrimalDual::new(0.0, 0.0),
    ];
    let runs: Vec<_> = inits
        .iter()
        .map(|init| {
            toy_run(&ToyConfig {
                algo: ToyAlgo::Hppp {
                    anchor: PrimalDual::new(12.0, 10.0),
                    mu,
                },
                init: init.clone(),
                n_iters: 2000,
            })
            .unwrap()
        })
        .collect();
    let toy_fp = runs
        .iter()
        .map(|r| r.trace.last().unwrap().fp_residual)
        .fold(0.0f64, f64::max);
    for a in &runs {
        for b in &runs {
            let dx = (a.final_point.x - b.final_point.x).abs();
            let dy = (a.final_point.y - b.final_point.y).abs();
            assert!(
                dx.max(dy) <= 10.0 * toy_fp,
                "toy finals spread {} exceeds 10 x residual {}",
                dx.max(dy),
                toy_fp
            );
        }
    }

    // Image problem: anchored TV inpainting from two random starts.
    let clean = synthetic_scene(64);
    let p = preset("bernoulli50-hppp").unwrap();
    let seed = 11;
    let results: Vec<_> = (0..2)
        .map(|i| {
            run_preset_with(
                &p,
                &clean,
                seed,
                &RunOverrides {
                    x0: Some(uniform_image(64, 64, derive(seed, &format!("alt-init{i}")))),
                    ..RunOverrides::default()
                },
            )
            .unwrap()
        })
        .collect();
    let img_fp = results
        .iter()
        .map(|r| r.trace.last().unwrap().fp_residual)
        .fold(0.0f64, f64::max);
    let spread = results[0].restored.max_abs_diff(&results[1].restored);
    assert!(
        spread <= 10.0 * img_fp,
        "restored spread {spread} exceeds 10 x residual {img_fp}"
    );
}

#[test]
fn anchor_study_spread_is_small_and_clean_anchor_wins() {
    let clean = synthetic_scene(64);
    let p = preset("bernoulli50-hppp").unwrap();
    let seed = 23;
    let deg = degrade(&p.task, &clean, seed).unwrap();
    let standard = study_anchor_images(&deg);
    assert_eq!(standard.len(), 4);
    let results = anchor_study(&p, &clean, seed, &standard).unwrap();
    let best = results
        .iter()
        .map(|r| r.psnr_out)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst = results.iter().map(|r| r.psnr_out).fold(f64::INFINITY, f64::min);
    assert!(
        best - worst <= 1.0,
        "anchor spread {} dB exceeds 1.0 dB",
        best - worst
    );

    let with_clean = anchor_study(&p, &clean, seed, &[clean.clone()]).unwrap();
    assert!(
        with_clean[0].psnr_out >= worst,
        "clean anchor {} should not lose to the worst standard anchor {}",
        with_clean[0].psnr_out,
        worst
    );
}

#[test]
fn anchored_deblurring_is_robust_to_initialization() {
    let clean = synthetic_scene(64);
    let p = preset("gauss16-hppp").unwrap();
    let summary = init_robustness(&p, &clean, 17, 10).unwrap();
    assert!(summary.psnr_mean.is_finite());
    assert!(
        summary.psnr_spread <= 0.2,
        "PSNR spread {} dB exceeds 0.2 dB",
        summary.psnr_spread
    );
}

#[test]
fn near_identity_deblurring_stays_faithful() {
    // A spread so small the discrete kernel degenerates to the identity;
    // with no noise the solver should barely move the image.
    let clean = synthetic_scene(64);
    let mut p = preset("gauss16-cp").unwrap();
    p.task = TaskKind::DeblurGaussian {
        sigma: 0.01,
        noise: 0.0,
    };
    let r = run_preset(&p, &clean, 1).unwrap();
    // The transform roundtrip leaves rounding-level residue, so the input
    // PSNR is merely astronomically high rather than infinite.
    assert!(
        r.psnr_in > 100.0,
        "identity blur plus zero noise, got {} dB in",
        r.psnr_in
    );
    assert!(
        r.psnr_out > 35.0,
        "smoothing a clean image cost too much: {} dB",
        r.psnr_out
    );
}

#[test]
fn deblur_presets_recover_detail_on_small_scenes() {
    let clean = synthetic_scene(64);
    for id in ["gauss16-hppp", "gauss16-ppp"] {
        let p = preset(id).unwrap();
        let r = run_preset(&p, &clean, 2).unwrap();
        assert!(
            r.psnr_out > r.psnr_in,
            "{id}: {} -> {} dB",
            r.psnr_in,
            r.psnr_out
        );
    }
    let blurred = convolve_psf(
        &clean,
        &degrade(
            &TaskKind::DeblurGaussian {
                sigma: 1.6,
                noise: 0.01,
            },
            &clean,
            2,
        )
        .unwrap()
        .psf
        .unwrap(),
        ConvMode::Fft,
    );
    assert!(psnr(&blurred, &clean, 1.0) < 40.0, "blur must actually degrade");
}
