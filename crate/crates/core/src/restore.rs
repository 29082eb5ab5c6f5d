//! Named end-to-end restoration experiments: seeded synthetic degradation,
//! the total-variation and denoiser-regularized solvers behind one preset
//! interface, anchor and initialization studies, and result serialization.
//!
//! Preset ids follow `<task>-<algo>` with tasks `gauss16`, `uniform9`,
//! `bernoulli50`, `character` and algorithms `cp`, `ppp`, `hppp`,
//! `grared-p3`, `grared-hp3`. Each preset pins every solver parameter, so a
//! preset id plus a seed fully determines the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::denoise::{DenoiseError, Denoiser};
use crate::fixedpoint::{
    hppp_iterate, ppp_iterate, DriverError, Extras, IterHooks, RunTrace, Schedule, ScheduleFamily,
};
use crate::grared::{grared_hp3, grared_p3, GraredError, GraredPoint, GraredProblem};
use crate::imaging::{
    add_wgn, convolve_adjoint, convolve_psf, glyph_mask, grad, psnr, uniform_image, write_pgm,
    ConvMode, DualField, Image, ImagingError, Mask, Psf, PsfKind,
};
use crate::precond::{GradOp, Point, PrecondError, Preconditioner, SaddleProblem};
use crate::prox::{DeblurProx, DualProjection, InpaintProx};
use crate::seed::derive;
use crate::space::InnerSpace;

#[derive(Debug, Error)]
pub enum RestoreError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("preset/parameter mismatch: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Precond(#[from] PrecondError),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Grared(#[from] GraredError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

fn bad(msg: impl Into<String>) -> RestoreError {
    RestoreError::BadConfig(msg.into())
}

/// Degradation model of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum TaskKind {
    DeblurGaussian { sigma: f64, noise: f64 },
    DeblurUniform { size: usize, noise: f64 },
    InpaintBernoulli { p_missing: f64, noise: f64 },
    InpaintCharacter { noise: f64 },
}

impl TaskKind {
    pub fn is_inpaint(&self) -> bool {
        matches!(
            self,
            TaskKind::InpaintBernoulli { .. } | TaskKind::InpaintCharacter { .. }
        )
    }

    pub fn is_deblur(&self) -> bool {
        !self.is_inpaint()
    }

    /// Noise level of the additive Gaussian noise, on the `[0, 1]` scale.
    pub fn noise(&self) -> f64 {
        match *self {
            TaskKind::DeblurGaussian { noise, .. }
            | TaskKind::DeblurUniform { noise, .. }
            | TaskKind::InpaintBernoulli { noise, .. }
            | TaskKind::InpaintCharacter { noise } => noise,
        }
    }

    fn psf(&self) -> Result<Option<Psf>, RestoreError> {
        let kind = match *self {
            TaskKind::DeblurGaussian { sigma, .. } => PsfKind::Gaussian { sigma },
            TaskKind::DeblurUniform { size, .. } => PsfKind::Uniform { size },
            _ => return Ok(None),
        };
        Ok(Some(Psf::new(kind)?))
    }
}

/// Iteration family run by a preset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgoKind {
    /// Plain primal-dual steps (unit relaxation).
    Cp,
    /// Relaxed primal-dual steps.
    Ppp,
    /// Anchored primal-dual steps.
    Hppp,
    /// Relaxed denoiser-coupled steps.
    GraredP3,
    /// Anchored denoiser-coupled steps.
    GraredHp3,
}

impl AlgoKind {
    pub fn is_anchored(self) -> bool {
        matches!(self, AlgoKind::Hppp | AlgoKind::GraredHp3)
    }

    pub fn uses_denoiser(self) -> bool {
        matches!(self, AlgoKind::GraredP3 | AlgoKind::GraredHp3)
    }
}

/// How the primal anchor of an anchored run is derived from the data.
/// The dual anchor is always the zero field.
#[derive(Clone, Debug, PartialEq)]
pub enum AnchorKind {
    Zeros,
    Ones,
    /// The degraded observation itself.
    Degraded,
    /// Adjoint of the blur operator applied to the observation.
    BlurredAdjoint,
    /// Observation plus one half on unobserved pixels.
    MaskBlend,
    /// A caller-supplied image.
    Custom(Image),
}

impl AnchorKind {
    /// Materializes the primal anchor image for a degradation.
    pub fn primal(&self, deg: &Degradation) -> Result<Image, RestoreError> {
        let o = &deg.observed;
        let (w, h) = (o.width(), o.height());
        match self {
            AnchorKind::Zeros => Ok(Image::zeros(w, h)),
            AnchorKind::Ones => Ok(Image::constant(w, h, 1.0)),
            AnchorKind::Degraded => Ok(o.clone()),
            AnchorKind::BlurredAdjoint => {
                let psf = deg
                    .psf
                    .as_ref()
                    .ok_or_else(|| bad("adjoint-blur anchor needs a blur task"))?;
                Ok(convolve_adjoint(o, psf, ConvMode::Fft))
            }
            AnchorKind::MaskBlend => {
                let m = deg
                    .mask
                    .as_ref()
                    .ok_or_else(|| bad("mask-blend anchor needs an inpainting task"))?;
                Ok(o.zip(m.as_image(), |ov, mv| ov + 0.5 * (1.0 - mv)))
            }
            AnchorKind::Custom(img) => {
                if !img.same_shape(o) {
                    return Err(bad("custom anchor shape differs from the image"));
                }
                Ok(img.clone())
            }
        }
    }
}

/// Complete parameter record of a preset run.
#[derive(Clone, Debug)]
pub struct SolverParams {
    pub tau: f64,
    pub s: f64,
    /// Data-fidelity weight.
    pub lambda: f64,
    /// Total-variation weight (TV algorithms only).
    pub beta: f64,
    pub n_iters: u64,
    /// Relaxation schedule (relaxed algorithms only).
    pub relax: Option<Schedule>,
    /// Anchoring schedule (anchored algorithms only).
    pub mu: Option<Schedule>,
    pub anchor: AnchorKind,
    /// Coupling-operator norm the step sizes are gated against. The TV
    /// presets store the published reciprocal of the step size here, which
    /// makes the gate product exactly one; the true gradient norm is larger,
    /// so these parameter sets run outside the contraction regime on
    /// purpose, as published.
    pub norm_k: f64,
    pub dual_projection: DualProjection,
    /// Noise level of the built-in Gaussian denoiser (denoiser algorithms
    /// only).
    pub den_sigma: f64,
}

/// A named, fully parameterized experiment.
#[derive(Clone, Debug)]
pub struct ExperimentPreset {
    pub id: String,
    pub task: TaskKind,
    pub algo: AlgoKind,
    pub params: SolverParams,
}

fn tv_params(task: &TaskKind, algo: AlgoKind) -> Result<SolverParams, RestoreError> {
    let inpaint = task.is_inpaint();
    let (lambda, beta) = if inpaint { (1.0, 0.01) } else { (2.0, 5e-4) };
    let relax = match algo {
        AlgoKind::Cp => Some(Schedule::relaxation(ScheduleFamily::Constant {
            value: 1.0,
        })?),
        AlgoKind::Ppp => Some(Schedule::relaxation(ScheduleFamily::Constant {
            value: if inpaint { 1.6 } else { 1.95 },
        })?),
        _ => None,
    };
    let mu = if algo == AlgoKind::Hppp {
        Some(Schedule::anchor(ScheduleFamily::InverseShift {
            c: if inpaint { 0.1 } else { 1.0 },
            k0: 2.0,
        })?)
    } else {
        None
    };
    Ok(SolverParams {
        tau: 0.57,
        s: 0.57,
        lambda,
        beta,
        n_iters: 400,
        relax,
        mu,
        anchor: if inpaint {
            AnchorKind::Ones
        } else {
            AnchorKind::BlurredAdjoint
        },
        norm_k: 1.0 / 0.57,
        dual_projection: DualProjection::Ball,
        den_sigma: 0.0,
    })
}

fn grared_params(task: &TaskKind, algo: AlgoKind) -> Result<SolverParams, RestoreError> {
    let inpaint = task.is_inpaint();
    let (tau, s, lambda, den_sigma) = if inpaint {
        (10.0, 0.1, 5.0, 0.7)
    } else {
        (1.0, 1.0, 20.0, 0.8)
    };
    let relax = if algo == AlgoKind::GraredP3 {
        Some(Schedule::relaxation(ScheduleFamily::Constant {
            value: 0.2,
        })?)
    } else {
        None
    };
    let mu = if algo == AlgoKind::GraredHp3 {
        Some(Schedule::anchor(ScheduleFamily::InverseShift {
            c: if inpaint { 0.05 } else { 1.0 },
            k0: 2.0,
        })?)
    } else {
        None
    };
    Ok(SolverParams {
        tau,
        s,
        lambda,
        beta: 0.0,
        n_iters: 400,
        relax,
        mu,
        anchor: AnchorKind::Degraded,
        norm_k: 1.0,
        dual_projection: DualProjection::Ball,
        den_sigma,
    })
}

/// Returns the named experiment configuration.
pub fn preset(id: &str) -> Result<ExperimentPreset, RestoreError> {
    let unknown = || RestoreError::UnknownPreset(id.to_string());
    let (task_part, algo_part) = id.split_once('-').ok_or_else(unknown)?;
    let task = match task_part {
        "gauss16" => TaskKind::DeblurGaussian {
            sigma: 1.6,
            noise: 0.01,
        },
        "uniform9" => TaskKind::DeblurUniform {
            size: 9,
            noise: 2f64.sqrt() / 255.0,
        },
        "bernoulli50" => TaskKind::InpaintBernoulli {
            p_missing: 0.5,
            noise: 0.01,
        },
        "character" => TaskKind::InpaintCharacter { noise: 0.01 },
        _ => return Err(unknown()),
    };
    let algo = match algo_part {
        "cp" => AlgoKind::Cp,
        "ppp" => AlgoKind::Ppp,
        "hppp" => AlgoKind::Hppp,
        "grared-p3" => AlgoKind::GraredP3,
        "grared-hp3" => AlgoKind::GraredHp3,
        _ => return Err(unknown()),
    };
    let params = if algo.uses_denoiser() {
        grared_params(&task, algo)?
    } else {
        tv_params(&task, algo)?
    };
    Ok(ExperimentPreset {
        id: id.to_string(),
        task,
        algo,
        params,
    })
}

/// Every preset id, tasks crossed with algorithms.
pub fn preset_ids() -> Vec<String> {
    let tasks = ["gauss16", "uniform9", "bernoulli50", "character"];
    let algos = ["cp", "ppp", "hppp", "grared-p3", "grared-hp3"];
    tasks
        .iter()
        .flat_map(|t| algos.iter().map(move |a| format!("{t}-{a}")))
        .collect()
}

/// Synthetic degradation of a clean image.
#[derive(Clone, Debug)]
pub struct Degradation {
    pub observed: Image,
    pub psf: Option<Psf>,
    pub mask: Option<Mask>,
}

/// Degrades `clean` according to the task, deriving independent noise and
/// mask streams from `seed`.
pub fn degrade(task: &TaskKind, clean: &Image, seed: u64) -> Result<Degradation, RestoreError> {
    degrade_with(task, clean, seed, None)
}

/// Like [`degrade`], with an optional replacement for the generated
/// inpainting mask.
pub fn degrade_with(
    task: &TaskKind,
    clean: &Image,
    seed: u64,
    mask_override: Option<&Mask>,
) -> Result<Degradation, RestoreError> {
    let (w, h) = (clean.width(), clean.height());
    if task.is_deblur() {
        if mask_override.is_some() {
            return Err(bad("mask override only applies to inpainting tasks"));
        }
        let psf = task.psf()?.expect("deblur task carries a point spread");
        let blurred = convolve_psf(clean, &psf, ConvMode::Fft);
        let observed = add_wgn(&blurred, task.noise(), derive(seed, "noise"));
        return Ok(Degradation {
            observed,
            psf: Some(psf),
            mask: None,
        });
    }
    let mask = match mask_override {
        Some(m) => {
            if !m.as_image().same_shape(clean) {
                return Err(bad("mask shape differs from the image"));
            }
            m.clone()
        }
        None => match task {
            TaskKind::InpaintBernoulli { p_missing, .. } => {
                Mask::bernoulli(w, h, *p_missing, derive(seed, "mask"))?
            }
            TaskKind::InpaintCharacter { .. } => {
                if w != h {
                    return Err(bad(
                        "glyph mask generation needs a square image; pass a mask explicitly",
                    ));
                }
                Mask::from_image(&glyph_mask(w, derive(seed, "mask")))
            }
            _ => unreachable!("non-inpaint task handled above"),
        },
    };
    let noisy = add_wgn(clean, task.noise(), derive(seed, "noise"));
    let observed = mask.apply(&noisy);
    Ok(Degradation {
        observed,
        psf: None,
        mask: Some(mask),
    })
}

/// Outcome of one preset run.
#[derive(Clone, Debug)]
pub struct RestoreResult {
    /// Restored image, clamped to `[0, 1]`.
    pub restored: Image,
    pub trace: RunTrace,
    pub psnr_in: f64,
    pub psnr_out: f64,
    pub preset_id: String,
    pub seed: u64,
}

/// Optional replacements applied to a preset run.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    /// Replaces the generated inpainting mask.
    pub mask: Option<Mask>,
    /// Replaces the primal initialization (the dual always starts at zero).
    pub x0: Option<Image>,
    /// Replaces the preset's anchor with this primal image (anchored
    /// algorithms only; the dual anchor stays zero).
    pub anchor_primal: Option<Image>,
}

/// Degrades `clean`, runs the preset's solver, and measures PSNR before and
/// after, all deterministically in `seed`.
pub fn run_preset(
    preset: &ExperimentPreset,
    clean: &Image,
    seed: u64,
) -> Result<RestoreResult, RestoreError> {
    run_preset_with(preset, clean, seed, &RunOverrides::default())
}

/// [`run_preset`] with optional mask, initialization and anchor overrides.
pub fn run_preset_with(
    preset: &ExperimentPreset,
    clean: &Image,
    seed: u64,
    ov: &RunOverrides,
) -> Result<RestoreResult, RestoreError> {
    let deg = degrade_with(&preset.task, clean, seed, ov.mask.as_ref())?;
    let x0 = match &ov.x0 {
        Some(img) => {
            if !img.same_shape(clean) {
                return Err(bad("initialization shape differs from the image"));
            }
            img.clone()
        }
        None => deg.observed.clone(),
    };
    let anchor_primal = if preset.algo.is_anchored() {
        Some(match &ov.anchor_primal {
            Some(img) => {
                if !img.same_shape(clean) {
                    return Err(bad("anchor shape differs from the image"));
                }
                img.clone()
            }
            None => preset.params.anchor.primal(&deg)?,
        })
    } else {
        if ov.anchor_primal.is_some() {
            return Err(bad("anchor override on an algorithm without an anchor"));
        }
        None
    };
    let psnr_in = psnr(&deg.observed, clean, 1.0);
    let (restored, trace) = if preset.algo.uses_denoiser() {
        solve_grared(preset, &deg, clean, &x0, anchor_primal)?
    } else {
        solve_tv(preset, &deg, clean, &x0, anchor_primal)?
    };
    let restored = restored.clamped01();
    let psnr_out = psnr(&restored, clean, 1.0);
    Ok(RestoreResult {
        restored,
        trace,
        psnr_in,
        psnr_out,
        preset_id: preset.id.clone(),
        seed,
    })
}

fn need_relax(p: &SolverParams) -> Result<&Schedule, RestoreError> {
    p.relax
        .as_ref()
        .ok_or_else(|| bad("relaxed algorithm without a relaxation schedule"))
}

fn need_mu(p: &SolverParams) -> Result<&Schedule, RestoreError> {
    p.mu
        .as_ref()
        .ok_or_else(|| bad("anchored algorithm without an anchoring schedule"))
}

/// Value of the data-fit-plus-TV objective at a primal iterate. The blur
/// model charges `lambda / 2` times the squared residual; the masked model
/// charges `lambda` times the squared masked residual, matching the
/// resolvents the solvers apply.
pub fn tv_objective(deg: &Degradation, x: &Image, lambda: f64, beta: f64) -> f64 {
    let tv: f64 = grad(x).magnitude().pixels().iter().sum();
    let data = match (&deg.psf, &deg.mask) {
        (Some(psf), _) => {
            let r = convolve_psf(x, psf, ConvMode::Fft).sub(&deg.observed);
            0.5 * lambda * r.dot(&r)
        }
        (None, Some(mask)) => {
            let r = mask.apply(&x.sub(&deg.observed));
            lambda * r.dot(&r)
        }
        (None, None) => panic!("degradation carries neither blur nor mask"),
    };
    data + beta * tv
}

fn data_prox(
    deg: &Degradation,
    lambda: f64,
) -> Result<Box<dyn Fn(&Image, f64) -> Image>, RestoreError> {
    match (&deg.psf, &deg.mask) {
        (Some(psf), _) => {
            let dp = DeblurProx::new(&deg.observed, psf, lambda);
            Ok(Box::new(move |xt: &Image, tau: f64| dp.apply(xt, tau)))
        }
        (None, Some(mask)) => {
            let ip = InpaintProx::new(&deg.observed, mask.as_image(), lambda);
            Ok(Box::new(move |xt: &Image, tau: f64| ip.apply(xt, tau)))
        }
        (None, None) => Err(bad("degradation carries neither blur nor mask")),
    }
}

fn solve_tv(
    preset: &ExperimentPreset,
    deg: &Degradation,
    clean: &Image,
    x0: &Image,
    anchor_primal: Option<Image>,
) -> Result<(Image, RunTrace), RestoreError> {
    let p = &preset.params;
    let (w, h) = (x0.width(), x0.height());
    let pre = Preconditioner::new(GradOp, p.tau, p.s, p.norm_k)?;
    let prox_f = data_prox(deg, p.lambda)?;
    let (beta, proj) = (p.beta, p.dual_projection);
    let prox_gstar: Box<dyn Fn(&DualField, f64) -> DualField> =
        Box::new(move |q: &DualField, _s: f64| proj.apply(q, beta));
    let problem = SaddleProblem::new(pre, prox_f, prox_gstar);
    let u0 = Point::<GradOp>::new(x0.clone(), DualField::zeros(w, h));
    let lambda = p.lambda;
    let hooks = IterHooks {
        seminorm: Some(Box::new(|g: &Point<GradOp>| {
            problem.preconditioner().seminorm(g)
        })),
        extras: Some(Box::new(move |_k: u64, u: &Point<GradOp>| Extras {
            objective: Some(tv_objective(deg, &u.x, lambda, beta)),
            psnr: Some(psnr(&u.x.clamped01(), clean, 1.0)),
        })),
        ..IterHooks::default()
    };
    let t = |u: &Point<GradOp>| problem.cp_step(u);
    let (last, trace) = match preset.algo {
        AlgoKind::Cp | AlgoKind::Ppp => ppp_iterate(t, &u0, need_relax(p)?, p.n_iters, &hooks)?,
        AlgoKind::Hppp => {
            let ap = anchor_primal.ok_or_else(|| bad("anchored run without an anchor"))?;
            let anchor = Point::<GradOp>::new(ap, DualField::zeros(w, h));
            hppp_iterate(t, &anchor, &u0, need_mu(p)?, p.n_iters, &hooks)?
        }
        _ => return Err(bad("not a TV algorithm")),
    };
    Ok((last.x, trace))
}

fn solve_grared(
    preset: &ExperimentPreset,
    deg: &Degradation,
    clean: &Image,
    x0: &Image,
    anchor_primal: Option<Image>,
) -> Result<(Image, RunTrace), RestoreError> {
    let p = &preset.params;
    let (w, h) = (x0.width(), x0.height());
    let den = Denoiser::gaussian_conv(p.den_sigma)?;
    let problem = GraredProblem::new(data_prox(deg, p.lambda)?, &den, p.tau, p.s)?;
    let u0 = GraredPoint::new(x0.clone(), Image::zeros(w, h));
    let hooks = IterHooks {
        seminorm: Some(Box::new(|g: &GraredPoint| problem.seminorm(g))),
        extras: Some(Box::new(move |_k: u64, u: &GraredPoint| Extras {
            objective: None,
            psnr: Some(psnr(&u.x.clamped01(), clean, 1.0)),
        })),
        ..IterHooks::default()
    };
    let (last, trace) = match preset.algo {
        AlgoKind::GraredHp3 => {
            let ap = anchor_primal.ok_or_else(|| bad("anchored run without an anchor"))?;
            let anchor = GraredPoint::new(ap, Image::zeros(w, h));
            grared_hp3(&problem, &anchor, &u0, need_mu(p)?, p.n_iters, &hooks)?
        }
        AlgoKind::GraredP3 => grared_p3(&problem, &u0, need_relax(p)?, p.n_iters, &hooks)?,
        _ => return Err(bad("not a denoiser algorithm")),
    };
    Ok((last.x, trace))
}

/// The four standard anchor images for anchored studies, in order: zeros,
/// observation plus one half on missing pixels, ones, observation. Deblur
/// degradations have no mask, so the second entry degenerates to the
/// observation.
pub fn study_anchor_images(deg: &Degradation) -> Vec<Image> {
    let o = &deg.observed;
    let (w, h) = (o.width(), o.height());
    let full = Mask::full(w, h);
    let m = deg.mask.as_ref().unwrap_or(&full).as_image();
    vec![
        Image::zeros(w, h),
        o.zip(m, |ov, mv| ov + 0.5 * (1.0 - mv)),
        Image::constant(w, h, 1.0),
        o.clone(),
    ]
}

/// Runs an anchored preset once per anchor image, sharing the seed and
/// degradation, and returns one result per anchor in order.
pub fn anchor_study(
    preset: &ExperimentPreset,
    clean: &Image,
    seed: u64,
    anchors: &[Image],
) -> Result<Vec<RestoreResult>, RestoreError> {
    if !preset.algo.is_anchored() {
        return Err(bad("anchor study needs an anchored algorithm"));
    }
    anchors
        .iter()
        .map(|a| {
            run_preset_with(
                preset,
                clean,
                seed,
                &RunOverrides {
                    anchor_primal: Some(a.clone()),
                    ..RunOverrides::default()
                },
            )
        })
        .collect()
}

/// Output PSNR statistics across random initializations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitRobustness {
    pub psnr_mean: f64,
    /// Largest minus smallest output PSNR.
    pub psnr_spread: f64,
}

/// Re-runs a preset from `n_inits` random uniform initializations with the
/// degradation and anchor fixed, summarizing the spread of output PSNR.
pub fn init_robustness(
    preset: &ExperimentPreset,
    clean: &Image,
    seed: u64,
    n_inits: usize,
) -> Result<InitRobustness, RestoreError> {
    if n_inits == 0 {
        return Err(bad("need at least one initialization"));
    }
    let (w, h) = (clean.width(), clean.height());
    let mut values = Vec::with_capacity(n_inits);
    for i in 0..n_inits {
        let x0 = uniform_image(w, h, derive(seed, &format!("init-{i}")));
        let r = run_preset_with(
            preset,
            clean,
            seed,
            &RunOverrides {
                x0: Some(x0),
                ..RunOverrides::default()
            },
        )?;
        values.push(r.psnr_out);
    }
    let psnr_mean = values.iter().sum::<f64>() / values.len() as f64;
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let min = values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(InitRobustness {
        psnr_mean,
        psnr_spread: max - min,
    })
}

fn db_value(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!("inf")
    }
}

/// Flat result record. PSNR infinities (zero error) serialize as the
/// string `"inf"`.
pub fn result_json(result: &RestoreResult, wall_ms: f64) -> Value {
    let mut map = Map::new();
    map.insert("preset_id".into(), json!(result.preset_id));
    map.insert("seed".into(), json!(result.seed));
    map.insert("psnr_in".into(), db_value(result.psnr_in));
    map.insert("psnr_out".into(), db_value(result.psnr_out));
    map.insert(
        "iters".into(),
        json!(result.trace.last().map_or(0, |r| r.iter)),
    );
    map.insert("wall_ms".into(), db_value(wall_ms));
    Value::Object(map)
}

/// Writes `restored.pgm`, `trace.csv` and `result.json` into
/// `<out_dir>/<preset_id>/` and returns that directory.
pub fn write_result_dir(
    result: &RestoreResult,
    out_dir: &Path,
    wall_ms: f64,
) -> Result<PathBuf, RestoreError> {
    let dir = out_dir.join(&result.preset_id);
    fs::create_dir_all(&dir)?;
    write_pgm(&dir.join("restored.pgm"), &result.restored)?;
    let mut csv = fs::File::create(dir.join("trace.csv"))?;
    result.trace.write_csv(&mut csv)?;
    let text = serde_json::to_string_pretty(&result_json(result, wall_ms))?;
    fs::write(dir.join("result.json"), text + "\n")?;
    Ok(dir)
}
