//! Acceptance gate for the whole workspace. Each test covers one release
//! criterion, prints a single PASS or FAIL line with the measured values,
//! and enforces the criterion's tolerance and runtime budget.
//!
//! Run with `cargo test -p hppp-cli --test acceptance -- --nocapture` to see
//! the lines.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hppp_core::imaging::read_image;
use hppp_core::toy::{toy_limit, toy_run, ToyAlgo, ToyConfig, ToyPoint};
use hppp_core::{preset, run_preset, run_suite, Schedule, ScheduleFamily, Suite};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(ok: bool, name: &str, detail: &str) {
    println!("{} acceptance/{name} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn within_budget(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed <= budget,
        "{name} took {elapsed:.2?}, budget {budget:.2?}"
    );
}

fn euclid(a: &ToyPoint, b: &ToyPoint) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn anchored_run(anchor: (f64, f64), init: (f64, f64), n_iters: u64) -> ToyPoint {
    let mu = Schedule::anchor(ScheduleFamily::InverseShift { c: 1.0, k0: 2.0 }).unwrap();
    let config = ToyConfig {
        algo: ToyAlgo::Hppp {
            anchor: ToyPoint::new(anchor.0, anchor.1),
            mu,
        },
        init: ToyPoint::new(init.0, init.1),
        n_iters,
    };
    toy_run(&config).expect("toy run converges").final_point
}

fn assets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

#[test]
fn criterion_01_anchored_runs_select_the_projected_limit() {
    let started = Instant::now();
    let cases = [
        ((12.0, 10.0), (2.0, 0.0)),
        ((12.0, 9.0), (3.0, 0.0)),
        ((12.0, 8.0), (4.0, 0.0)),
        ((0.0, 0.0), (1.0, 0.0)),
    ];
    let mut worst_short = 0.0f64;
    let mut worst_long = 0.0f64;
    for (anchor, limit) in cases {
        let limit = ToyPoint::new(limit.0, limit.1);
        let short = euclid(&anchored_run(anchor, (-6.0, 6.0), 1_000), &limit);
        let long = euclid(&anchored_run(anchor, (-6.0, 6.0), 100_000), &limit);
        worst_short = worst_short.max(short);
        worst_long = worst_long.max(long);
    }
    let ok = worst_short <= 0.05 && worst_long <= 1e-3;
    report(
        ok,
        "anchored-limits",
        &format!(
            "worst err at 1e3 iters {worst_short:.2e} (tol 5e-2), at 1e5 iters {worst_long:.2e} (tol 1e-3)"
        ),
    );
    within_budget("anchored-limits", started, Duration::from_secs(5));
}

#[test]
fn criterion_02_limit_depends_on_anchor_not_initialization() {
    let started = Instant::now();
    let anchor = (12.0, 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let finals: Vec<ToyPoint> = (0..10)
        .map(|_| {
            let init = (rng.random::<f64>() * 20.0 - 10.0, rng.random::<f64>() * 20.0 - 10.0);
            anchored_run(anchor, init, 2_000)
        })
        .collect();
    let mut init_spread = 0.0f64;
    for i in 0..finals.len() {
        for j in i + 1..finals.len() {
            init_spread = init_spread.max(euclid(&finals[i], &finals[j]));
        }
    }

    let mut anchor_err = 0.0f64;
    let mut anchor_sep = f64::INFINITY;
    let anchored: Vec<ToyPoint> = [(12.0, 10.0), (12.0, 9.0), (12.0, 8.0)]
        .into_iter()
        .map(|a| {
            let f = anchored_run(a, (-6.0, 6.0), 2_000);
            anchor_err = anchor_err.max(euclid(&f, &toy_limit(&ToyPoint::new(a.0, a.1))));
            f
        })
        .collect();
    for i in 0..anchored.len() {
        for j in i + 1..anchored.len() {
            anchor_sep = anchor_sep.min(euclid(&anchored[i], &anchored[j]));
        }
    }

    let ok = init_spread <= 0.05 && anchor_err <= 0.05 && anchor_sep >= 0.9;
    report(
        ok,
        "anchor-dichotomy",
        &format!(
            "10 inits spread {init_spread:.2e} (tol 5e-2), anchored formula err {anchor_err:.2e}, anchor separation {anchor_sep:.2}"
        ),
    );
    within_budget("anchor-dichotomy", started, Duration::from_secs(5));
}

#[test]
fn criterion_03_gap_norm_decays_at_the_guaranteed_rate() {
    let started = Instant::now();
    let items = run_suite(Suite::Rate, 7).expect("rate suite runs");
    let detail: Vec<String> = items
        .iter()
        .map(|i| format!("{} slope {:.2} (bound {})", i.name, i.measured, i.bound))
        .collect();
    let ok = items.iter().all(|i| i.passed);
    report(ok, "gap-decay-rate", &detail.join(", "));
    within_budget("gap-decay-rate", started, Duration::from_secs(30));
}

#[test]
fn criterion_04_iteration_maps_are_firmly_nonexpansive_in_m() {
    let started = Instant::now();
    let items = run_suite(Suite::Mfne, 7).expect("mfne suite runs");
    let worst = items.iter().map(|i| i.measured).fold(f64::MIN, f64::max);
    let ok = items.iter().all(|i| i.passed);
    report(
        ok,
        "m-firm-nonexpansiveness",
        &format!("worst violation {worst:.2e} over scalar and tv-deblur maps (tol 1e-8)"),
    );
    within_budget("m-firm-nonexpansiveness", started, Duration::from_secs(10));
}

#[test]
fn criterion_05_unit_parameter_splitting_reproduces_drs() {
    let started = Instant::now();
    let items = run_suite(Suite::DrsEquiv, 7).expect("drs suite runs");
    let split = items
        .iter()
        .find(|i| i.name == "splitting-matches-drs")
        .expect("splitting item");
    let admm = items
        .iter()
        .find(|i| i.name == "admm-matches-drs")
        .expect("admm item");
    let ok = items.iter().all(|i| i.passed);
    report(
        ok,
        "drs-equivalence",
        &format!(
            "max per-iterate gap vs drs {:.2e} (tol 1e-12), vs admm {:.2e} (tol 1e-10)",
            split.measured, admm.measured
        ),
    );
    within_budget("drs-equivalence", started, Duration::from_secs(5));
}

#[test]
fn criterion_06_fft_deblur_prox_matches_the_dense_solve() {
    let started = Instant::now();
    let items = run_suite(Suite::Prox, 7).expect("prox suite runs");
    let fft = items
        .iter()
        .find(|i| i.name == "fft-prox-dense-oracle")
        .expect("fft oracle item");
    report(
        fft.passed,
        "fft-prox-oracle",
        &format!("max pixel error vs dense normal equations {:.2e} (tol 1e-8)", fft.measured),
    );
    within_budget("fft-prox-oracle", started, Duration::from_secs(5));
}

#[test]
fn criterion_07_adjoints_projections_and_resolvents_hold() {
    let started = Instant::now();
    let items = run_suite(Suite::Adjoint, 7).expect("adjoint suite runs");
    let ok = items.iter().all(|i| i.passed);
    let worst = items
        .iter()
        .max_by(|a, b| (a.measured / a.bound).total_cmp(&(b.measured / b.bound)))
        .expect("items");
    report(
        ok,
        "operator-identities",
        &format!(
            "{} invariants; tightest {} at {:.2e} (bound {:.0e})",
            items.len(),
            worst.name,
            worst.measured,
            worst.bound
        ),
    );
    within_budget("operator-identities", started, Duration::from_secs(10));
}

#[test]
fn criterion_08_denoisers_are_homogeneous_symmetric_contractions() {
    let started = Instant::now();
    let items = run_suite(Suite::Denoiser, 7).expect("denoiser suite runs");
    let ok = items.iter().all(|i| i.passed);
    let norms: Vec<String> = items
        .iter()
        .filter(|i| i.name.ends_with("residual-norm"))
        .map(|i| format!("{} {:.3}", i.name, i.measured))
        .collect();
    report(
        ok,
        "denoiser-properties",
        &format!("homogeneity and symmetry within 1e-10; {}", norms.join(", ")),
    );
    within_budget("denoiser-properties", started, Duration::from_secs(5));
}

#[test]
fn criterion_09_limit_satisfies_the_variational_inequality() {
    let started = Instant::now();
    let m_inner = |p: &ToyPoint, q: &ToyPoint| (p.x - p.y) * (q.x - q.y);
    let mut worst = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for anchor in [
        ToyPoint::new(12.0, 10.0),
        ToyPoint::new(0.0, 0.0),
        ToyPoint::new(0.5, 0.3),
    ] {
        let star = toy_limit(&anchor);
        for _ in 0..100 {
            let u = ToyPoint::new(1.0 + 20.0 * rng.random::<f64>(), 0.0);
            let gap = ToyPoint::new(star.x - anchor.x, star.y - anchor.y);
            let dir = ToyPoint::new(u.x - star.x, u.y - star.y);
            worst = worst.min(m_inner(&gap, &dir));
        }
    }
    report(
        worst >= -1e-9,
        "vi-certificate",
        &format!("min of <u*-a, u-u*>_M over sampled fixed points {worst:.2e} (tol -1e-9)"),
    );
    within_budget("vi-certificate", started, Duration::from_secs(1));
}

#[test]
fn criterion_10_presets_restore_the_reference_scene() {
    let started = Instant::now();
    let scene = read_image(&assets_dir().join("scene256.pgm")).expect("bundled scene");

    let deblur = run_preset(&preset("gauss16-hppp").unwrap(), &scene, 1).expect("deblur runs");
    let deblur_gain = deblur.psnr_out - deblur.psnr_in;

    let tv = run_preset(&preset("bernoulli50-hppp").unwrap(), &scene, 1).expect("tv inpaint runs");
    let tv_gain = tv.psnr_out - tv.psnr_in;

    let grared =
        run_preset(&preset("bernoulli50-grared-hp3").unwrap(), &scene, 1).expect("grared runs");
    let grared_margin = grared.psnr_out - tv.psnr_out;

    let ok = deblur_gain >= 1.0 && tv_gain >= 5.0 && grared_margin >= -0.5;
    report(
        ok,
        "restoration-quality-256",
        &format!(
            "deblur gain {deblur_gain:.2} dB (need 1.0), tv inpaint gain {tv_gain:.2} dB (need 5.0), grared vs tv {grared_margin:+.2} dB (need -0.5)"
        ),
    );
    within_budget("restoration-quality-256", started, Duration::from_secs(300));
}

#[test]
fn criterion_11_cli_runs_are_byte_reproducible() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let scene = assets_dir().join("scene128.pgm");
    let mut traces: Vec<Vec<u8>> = Vec::new();
    for sub in ["a", "b"] {
        for preset_id in ["bernoulli50-hppp", "bernoulli50-grared-hp3"] {
            let out_dir = tmp.path().join(sub);
            let out = Command::new(env!("CARGO_BIN_EXE_hppp"))
                .args([
                    "inpaint", "--preset", preset_id, "--input", scene.to_str().unwrap(),
                    "--seed", "3", "--out", out_dir.to_str().unwrap(),
                ])
                .output()
                .expect("binary runs");
            assert!(out.status.success());
            traces.push(std::fs::read(out_dir.join(preset_id).join("trace.csv")).unwrap());
        }
    }
    let tv_identical = traces[0] == traces[2];
    let grared_identical = traces[1] == traces[3];

    let run_toy = |dir: &Path| {
        let out = Command::new(env!("CARGO_BIN_EXE_hppp"))
            .args([
                "toy", "--algo", "hppp", "--anchor", "12,10", "--init", "-6,6", "--mu",
                "inv-shift:1:2", "--iters", "500", "--out", dir.to_str().unwrap(),
            ])
            .output()
            .expect("binary runs");
        assert!(out.status.success());
        std::fs::read(dir.join("toy_trajectory.csv")).unwrap()
    };
    let toy_identical = run_toy(&tmp.path().join("t1")) == run_toy(&tmp.path().join("t2"));

    let ok = tv_identical && grared_identical && toy_identical;
    report(
        ok,
        "cli-determinism",
        &format!(
            "repeated seeded runs byte-identical: tv {tv_identical}, grared {grared_identical}, toy {toy_identical}"
        ),
    );
    within_budget("cli-determinism", started, Duration::from_secs(60));
}
