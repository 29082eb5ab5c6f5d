//! End-to-end contract tests for the `hppp` binary: output formats, exit
//! codes, result directory layout and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hppp_core::imaging::{synthetic_scene, write_pgm};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hppp"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

/// Extracts the float following `key=` in a summary line.
fn field(line: &str, key: &str) -> f64 {
    let token = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix(key).and_then(|t| t.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key}= field in {line:?}"));
    token.parse().unwrap_or_else(|_| panic!("bad {key} value {token:?}"))
}

fn write_scene(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join(format!("scene{n}.pgm"));
    write_pgm(&path, &synthetic_scene(n)).expect("write scene");
    path
}

#[test]
fn toy_anchored_summary_names_the_analytic_limit() {
    let out = run(&[
        "toy", "--algo", "hppp", "--anchor", "12,10", "--init", "-6,6", "--mu", "inv-shift:1:2",
        "--iters", "1000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let line = text.lines().next().expect("summary line");
    assert!(
        line.starts_with("limit_claim=(2,0) final=("),
        "unexpected summary {line:?}"
    );
    assert!(field(line, "err_M") < 0.05);
}

#[test]
fn toy_relaxed_summary_claims_no_limit() {
    let out = run(&["toy", "--algo", "ppp", "--relax", "1.2", "--init", "0,0", "--iters", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let line = text.lines().next().expect("summary line");
    assert!(line.starts_with("limit_claim=none final=("), "unexpected summary {line:?}");
    assert!(field(line, "err_M") < 1e-6, "relaxed run should land in the fixed set");
}

#[test]
fn toy_missing_anchor_is_a_usage_error_naming_the_flag() {
    let out = run(&["toy", "--algo", "hppp", "--init", "0,0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--anchor"));
}

#[test]
fn toy_bad_schedule_is_a_usage_error() {
    let out = run(&["toy", "--algo", "hppp", "--anchor", "1,0", "--mu", "const:0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["toy", "--algo", "ppp", "--relax", "2.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn toy_trajectory_csv_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "toy", "--algo", "hppp", "--anchor", "3,1", "--mu", "inv-shift:1:2", "--iters", "200",
            "--out", dir.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir_a.join("toy_trajectory.csv")).unwrap();
    let b = std::fs::read(dir_b.join("toy_trajectory.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "same command must produce byte-identical CSVs");
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("iter,x,y"));
    assert_eq!(text.lines().count(), 202, "header plus init plus 200 iterates");
}

#[test]
fn unknown_flags_and_missing_subcommands_are_usage_errors() {
    let out = run(&["toy", "--algo", "ppp", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = bin().output().expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_file_is_an_io_error() {
    let out = run(&["deblur", "--preset", "gauss16-cp", "--input", "/no/such/scene.pgm"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_of(&out).contains("/no/such/scene.pgm"));
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), 16);
    let out = run(&["deblur", "--preset", "gauss16-zzz", "--input", scene.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("gauss16-zzz"));
}

#[test]
fn preset_task_must_match_the_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), 16);
    let out = run(&["deblur", "--preset", "bernoulli50-cp", "--input", scene.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("inpaint"));
    let out = run(&["inpaint", "--preset", "gauss16-cp", "--input", scene.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("deblur"));
}

#[test]
fn deblur_writes_the_result_directory_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), 64);
    let out_dir = tmp.path().join("runs");
    let out = run(&[
        "deblur", "--preset", "gauss16-cp", "--input", scene.to_str().unwrap(), "--seed", "5",
        "--out", out_dir.to_str().unwrap(), "--iters", "120",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let text = stdout_of(&out);
    let line = text.lines().next().expect("summary line");
    assert!(line.starts_with("psnr_in="), "unexpected summary {line:?}");
    let psnr_in = field(line, "psnr_in");
    let psnr_out = field(line, "psnr_out");
    assert!(psnr_in.is_finite() && psnr_out.is_finite());

    let dir = out_dir.join("gauss16-cp");
    for name in ["restored.pgm", "trace.csv", "result.json"] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
    let obj = json.as_object().unwrap();
    let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["iters", "preset_id", "psnr_in", "psnr_out", "seed", "wall_ms"]
    );
    assert_eq!(obj["preset_id"], "gauss16-cp");
    assert_eq!(obj["seed"], 5);
    assert_eq!(obj["iters"], 120);
    assert_eq!(obj["psnr_out"].as_f64().unwrap(), psnr_out);
    assert!(obj["wall_ms"].as_f64().unwrap() > 0.0);
}

#[test]
fn inpaint_same_seed_gives_byte_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), 64);
    let mut traces = Vec::new();
    for sub in ["r1", "r2"] {
        let out_dir = tmp.path().join(sub);
        let out = run(&[
            "inpaint", "--preset", "bernoulli50-cp", "--input", scene.to_str().unwrap(),
            "--seed", "11", "--out", out_dir.to_str().unwrap(), "--iters", "80",
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        traces.push(std::fs::read(out_dir.join("bernoulli50-cp/trace.csv")).unwrap());
    }
    assert!(!traces[0].is_empty());
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn several_presets_run_in_parallel_with_per_preset_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), 64);
    let out_dir = tmp.path().join("runs");
    let out = run(&[
        "inpaint", "--preset", "bernoulli50-cp", "--preset", "bernoulli50-ppp",
        "--input", scene.to_str().unwrap(), "--seed", "3", "--out", out_dir.to_str().unwrap(),
        "--iters", "60", "--jobs", "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "preset=bernoulli50-cp");
    assert!(lines[1].starts_with("psnr_in="));
    assert_eq!(lines[2], "preset=bernoulli50-ppp");
    assert!(lines[3].starts_with("psnr_in="));
    assert!(out_dir.join("bernoulli50-cp/result.json").is_file());
    assert!(out_dir.join("bernoulli50-ppp/result.json").is_file());
}

#[test]
fn mask_override_replaces_the_generated_mask() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write_scene(tmp.path(), 64);
    let mask_path = tmp.path().join("mask.pgm");
    let mask = hppp_core::Image::from_fn(64, 64, |r, _| if r == 10 { 0.0 } else { 1.0 });
    write_pgm(&mask_path, &mask).unwrap();
    let out_dir = tmp.path().join("runs");
    let out = run(&[
        "inpaint", "--preset", "bernoulli50-cp", "--input", scene.to_str().unwrap(),
        "--seed", "4", "--out", out_dir.to_str().unwrap(), "--iters", "60",
        "--mask", mask_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let line_text = stdout_of(&out);
    let line = line_text.lines().next().unwrap();
    // A single missing row keeps far more of the image than a 50 percent
    // Bernoulli mask would.
    assert!(field(line, "psnr_in") > 15.0);

    let bad_mask = tmp.path().join("bad.pgm");
    write_pgm(&bad_mask, &synthetic_scene(16)).unwrap();
    let out = run(&[
        "inpaint", "--preset", "bernoulli50-cp", "--input", scene.to_str().unwrap(),
        "--mask", bad_mask.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_prints_one_line_per_invariant_and_exit_zero_on_pass() {
    let out = run(&["check", "--suite", "denoiser", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    let lines: Vec<_> = text.lines().collect();
    assert!(!lines.is_empty());
    for line in &lines {
        assert!(
            line.starts_with("PASS ") || line.starts_with("FAIL "),
            "unexpected line {line:?}"
        );
        assert!(line.contains("denoiser/"));
        assert!(line.contains("measured="));
        assert!(line.contains("bound="));
    }
}

#[test]
fn check_unknown_suite_is_a_usage_error() {
    let out = run(&["check", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("bogus"));
}
