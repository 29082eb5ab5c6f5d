//! Command-line front end for the anchored splitting solvers.
//!
//! Four subcommands:
//!
//! * `toy`: run the exactly solvable scalar saddle problem and report the
//!   final point against the analytic limit.
//! * `deblur` / `inpaint`: degrade a clean image deterministically, restore
//!   it with a named preset, and write `restored.pgm`, `trace.csv` and
//!   `result.json` into a per-preset directory.
//! * `check`: run the property-check suites and print one PASS/FAIL line
//!   per invariant.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or configuration error,
//! 3 solver divergence, 4 I/O error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hppp_core::grared::GraredError;
use hppp_core::imaging::read_image;
use hppp_core::restore::write_result_dir;
use hppp_core::toy::{
    toy_dist_m, toy_limit, toy_run, write_trajectory_csv, ToyAlgo, ToyConfig, ToyPoint,
};
use hppp_core::{
    preset, run_preset_with, run_suite, DriverError, ExperimentPreset, Mask, RestoreError,
    RestoreResult, RunOverrides, Schedule, ScheduleFamily, Suite,
};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "hppp",
    version,
    about = "Anchored splitting solvers: scalar saddle runs, image restoration presets, property checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scalar saddle problem and compare against its analytic limit.
    Toy(ToyArgs),
    /// Blur and renoise a clean image, then restore it with a preset.
    Deblur(DeblurArgs),
    /// Mask and renoise a clean image, then restore it with a preset.
    Inpaint(InpaintArgs),
    /// Run property-check suites (adjoint, mfne, prox, denoiser, drs-equiv, rate).
    Check(CheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ToyAlgoArg {
    /// Anchored driver; converges to the projection of the anchor.
    Hppp,
    /// Relaxed driver; converges to some fixed point.
    Ppp,
}

#[derive(Args)]
struct ToyArgs {
    /// Driver family.
    #[arg(long, value_enum)]
    algo: ToyAlgoArg,
    /// Anchor "x,y" (required by the anchored driver).
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    anchor: Option<(f64, f64)>,
    /// Starting point "x,y".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    init: (f64, f64),
    /// Anchoring schedule: inv-shift:<c>:<k0>, inv-pow:<alpha> or min2k.
    #[arg(long, default_value = "inv-shift:1:2")]
    mu: String,
    /// Relaxation schedule, or a bare number for a constant weight.
    #[arg(long, default_value = "1.0")]
    relax: String,
    /// Iteration count.
    #[arg(long, default_value_t = 1000)]
    iters: u64,
    /// Directory for the trajectory CSV (`toy_trajectory.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RestoreCommon {
    /// Preset id "<task>-<algo>"; repeat the flag to run several presets.
    #[arg(long, required = true)]
    preset: Vec<String>,
    /// Clean source image (PGM or PNG, loaded as grayscale in [0, 1]).
    #[arg(long)]
    input: PathBuf,
    /// Seed for noise, masks and any random initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; each preset writes into `<out>/<preset-id>/`.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Override the preset's iteration count.
    #[arg(long)]
    iters: Option<u64>,
    /// Worker threads when several presets are given.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct DeblurArgs {
    #[command(flatten)]
    common: RestoreCommon,
}

#[derive(Args)]
struct InpaintArgs {
    #[command(flatten)]
    common: RestoreCommon,
    /// Mask image replacing the generated mask (zero pixels are missing).
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Suite name; repeat the flag for several. Default: every suite.
    #[arg(long)]
    suite: Vec<String>,
    /// Seed for the sampled test points.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// A CLI failure carrying the process exit code it maps to.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Diverged(String),
    CheckFailed,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Diverged(_) => EXIT_DIVERGED,
            CliError::CheckFailed => EXIT_CHECK_FAILED,
        }
    }

    fn message(&self) -> Option<&str> {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Diverged(m) => Some(m),
            CliError::CheckFailed => None,
        }
    }
}

/// Sorts a library-side failure into the exit-code taxonomy. Divergence is
/// recognized wherever it surfaces; imaging, file and serialization
/// failures count as I/O; everything else is a configuration problem.
fn from_restore(e: RestoreError) -> CliError {
    match &e {
        RestoreError::Driver(DriverError::Diverged { .. })
        | RestoreError::Grared(GraredError::Driver(DriverError::Diverged { .. })) => {
            CliError::Diverged(e.to_string())
        }
        RestoreError::Imaging(_) | RestoreError::Io(_) | RestoreError::Json(_) => {
            CliError::Io(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    }
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"x,y\", got {s:?}"))?;
    let px = x
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("bad x in {s:?}: {e}"))?;
    let py = y
        .trim()
        .parse::<f64>()
        .map_err(|e| format!("bad y in {s:?}: {e}"))?;
    Ok((px, py))
}

/// Parses a relaxation schedule; a bare number means a constant weight.
fn parse_relaxation(s: &str) -> Result<Schedule, CliError> {
    let family = match s.trim().parse::<f64>() {
        Ok(value) => ScheduleFamily::Constant { value },
        Err(_) => s
            .parse::<ScheduleFamily>()
            .map_err(|e| CliError::Usage(e.to_string()))?,
    };
    Schedule::relaxation(family).map_err(|e| CliError::Usage(e.to_string()))
}

fn parse_anchoring(s: &str) -> Result<Schedule, CliError> {
    let family = s
        .parse::<ScheduleFamily>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Schedule::anchor(family).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_toy(args: &ToyArgs) -> Result<(), CliError> {
    let algo = match args.algo {
        ToyAlgoArg::Hppp => {
            let (ax, ay) = args.anchor.ok_or_else(|| {
                CliError::Usage("--anchor is required when --algo is hppp".into())
            })?;
            ToyAlgo::Hppp {
                anchor: ToyPoint::new(ax, ay),
                mu: parse_anchoring(&args.mu)?,
            }
        }
        ToyAlgoArg::Ppp => ToyAlgo::Ppp {
            relax: parse_relaxation(&args.relax)?,
        },
    };
    let config = ToyConfig {
        algo,
        init: ToyPoint::new(args.init.0, args.init.1),
        n_iters: args.iters,
    };
    let run = toy_run(&config).map_err(|e| match e {
        DriverError::Diverged { .. } => CliError::Diverged(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    })?;
    if let Some(dir) = &args.out {
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(dir)?;
            let mut f = fs::File::create(dir.join("toy_trajectory.csv"))?;
            write_trajectory_csv(&mut f, &run.trajectory)
        };
        write().map_err(|e| CliError::Io(format!("cannot write {}: {e}", dir.display())))?;
    }
    let f = &run.final_point;
    match &run.limit_claim {
        Some(limit) => println!(
            "limit_claim=({},{}) final=({},{}) err_M={}",
            limit.x,
            limit.y,
            f.x,
            f.y,
            toy_dist_m(f, limit)
        ),
        None => println!(
            "limit_claim=none final=({},{}) err_M={}",
            f.x,
            f.y,
            toy_dist_m(f, &toy_limit(f))
        ),
    }
    Ok(())
}

/// Loads the input, resolves every preset up front, then runs them (in
/// parallel when `--jobs` exceeds one) and writes one result directory per
/// preset. Prints a `psnr_in=... psnr_out=...` line per run.
fn cmd_restore(
    args: &RestoreCommon,
    mask_path: Option<&PathBuf>,
    want_inpaint: bool,
) -> Result<(), CliError> {
    let clean = read_image(&args.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.input.display())))?;
    let mask = match mask_path {
        Some(p) => {
            let img = read_image(p)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
            Some(Mask::from_image(&img))
        }
        None => None,
    };
    let mut presets = Vec::new();
    for id in &args.preset {
        let mut p = preset(id).map_err(|e| CliError::Usage(e.to_string()))?;
        if p.task.is_inpaint() != want_inpaint {
            let (actual, wanted) = if want_inpaint {
                ("a deblurring", "deblur")
            } else {
                ("an inpainting", "inpaint")
            };
            return Err(CliError::Usage(format!(
                "preset {id} is {actual} task; use the {wanted} command"
            )));
        }
        if let Some(n) = args.iters {
            p.params.n_iters = n;
        }
        presets.push(p);
    }

    let run_one = |p: &ExperimentPreset| -> Result<(RestoreResult, f64), RestoreError> {
        let overrides = RunOverrides {
            mask: mask.clone(),
            ..RunOverrides::default()
        };
        let started = Instant::now();
        let result = run_preset_with(p, &clean, args.seed, &overrides)?;
        Ok((result, started.elapsed().as_secs_f64() * 1e3))
    };
    let mut outcomes = Vec::with_capacity(presets.len());
    if args.jobs > 1 && presets.len() > 1 {
        for chunk in presets.chunks(args.jobs) {
            let chunk_results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk.iter().map(|p| scope.spawn(|| run_one(p))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("preset worker panicked"))
                    .collect()
            });
            outcomes.extend(chunk_results);
        }
    } else {
        outcomes.extend(presets.iter().map(run_one));
    }

    let several = presets.len() > 1;
    for outcome in outcomes {
        let (result, wall_ms) = outcome.map_err(from_restore)?;
        write_result_dir(&result, &args.out, wall_ms).map_err(from_restore)?;
        if several {
            println!("preset={}", result.preset_id);
        }
        println!("psnr_in={} psnr_out={}", result.psnr_in, result.psnr_out);
    }
    Ok(())
}

fn cmd_check(args: &CheckArgs) -> Result<(), CliError> {
    let suites: Vec<Suite> = if args.suite.is_empty() {
        Suite::all().to_vec()
    } else {
        args.suite
            .iter()
            .map(|s| s.parse::<Suite>().map_err(CliError::Usage))
            .collect::<Result<_, _>>()?
    };
    let mut all_passed = true;
    for suite in suites {
        let items = run_suite(suite, args.seed).map_err(from_restore)?;
        for item in items {
            let status = if item.passed { "PASS" } else { "FAIL" };
            all_passed &= item.passed;
            println!(
                "{status} {suite}/{} measured={} bound={}",
                item.name, item.measured, item.bound
            );
        }
    }
    if all_passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Toy(a) => cmd_toy(a),
        Command::Deblur(a) => cmd_restore(&a.common, None, false),
        Command::Inpaint(a) => cmd_restore(&a.common, a.mask.as_ref(), true),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(msg) = e.message() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.code())
        }
    }
}
