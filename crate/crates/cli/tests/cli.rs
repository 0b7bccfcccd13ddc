//! End-to-end tests of the `awgan` binary: exit codes, reproducible output
//! bytes, the plain/pinned equivalence at the command level, and help-text
//! guarantees.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn awgan() -> Command {
    Command::new(env!("CARGO_BIN_EXE_awgan"))
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("awgan-cli-{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const QUICK: &[&str] = &[
    "--iters",
    "30",
    "--batch-size",
    "16",
    "--gen-sizes",
    "2,16,16,2",
    "--disc-sizes",
    "2,16,16,1",
    "--seed",
    "7",
];

#[test]
fn train_plain_equals_pinned_unit_weights() {
    let dir = fresh_dir("equiv");
    let out1 = run(awgan()
        .args(["train", "--mode", "plain", "--task", "ring8"])
        .args(QUICK)
        .args(["--out", dir.join("plain").to_str().unwrap()]));
    assert!(out1.status.success(), "{}", String::from_utf8_lossy(&out1.stderr));
    let out2 = run(awgan()
        .args(["train", "--mode", "aw-normalized", "--pin-weights", "1,1"])
        .args(QUICK)
        .args(["--out", dir.join("pinned").to_str().unwrap()]));
    assert!(out2.status.success(), "{}", String::from_utf8_lossy(&out2.stderr));

    let log1 = std::fs::read(find_file(&dir.join("plain"), "runlog.csv")).unwrap();
    let log2 = std::fs::read(find_file(&dir.join("pinned"), "runlog.csv")).unwrap();
    assert_eq!(log1, log2, "run logs must be byte-identical");
}

#[test]
fn train_is_reproducible_byte_for_byte() {
    let dir = fresh_dir("repro");
    for sub in ["a", "b"] {
        let out = run(awgan()
            .args(["train", "--mode", "aw-normalized"])
            .args(QUICK)
            .args(["--out", dir.join(sub).to_str().unwrap()]));
        assert!(out.status.success());
    }
    for name in ["runlog.csv", "disc.ckpt", "gen.ckpt", "config.toml"] {
        let a = std::fs::read(find_file(&dir.join("a"), name)).unwrap();
        let b = std::fs::read(find_file(&dir.join("b"), name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

fn find_file(root: &Path, name: &str) -> PathBuf {
    fn walk(dir: &Path, name: &str, hits: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(&path, name, hits);
            } else if path.file_name().map(|n| n == name).unwrap_or(false) {
                hits.push(path);
            }
        }
    }
    let mut hits = Vec::new();
    walk(root, name, &mut hits);
    assert_eq!(hits.len(), 1, "expected exactly one {name} under {root:?}");
    hits.remove(0)
}

#[test]
fn missing_config_file_is_usage_error() {
    let out = run(awgan().args(["train", "--config", "/nonexistent/nope.toml"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = fresh_dir("badkey");
    let path = dir.join("bad.toml");
    std::fs::write(&path, "[train]\nnot_a_key = 1\n").unwrap();
    let out = run(awgan().args(["train", "--config", path.to_str().unwrap()]));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not_a_key"), "stderr: {err}");
}

#[test]
fn unknown_study_is_usage_error() {
    let out = run(awgan().args(["diagnose", "nosuchstudy"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_task_is_usage_error() {
    let out = run(awgan().args(["train", "--task", "cifar10"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_threshold_defaults() {
    let out = run(awgan().args(["train", "--help"]));
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "alpha1 [default: 0.5]",
        "alpha2 [default: 0.75]",
        "epsilon [default: 0.05]",
        "delta [default: 0.05]",
        "[default: 25000]",
        "[default: bce]",
    ] {
        assert!(text.contains(needle), "help is missing {needle:?}\n{text}");
    }
}

#[test]
fn config_file_overlays_and_flags_win() {
    let dir = fresh_dir("overlay");
    let path = dir.join("cfg.toml");
    std::fs::write(
        &path,
        "[train]\niterations = 10\nbatch_size = 16\ngen_sizes = [2, 16, 16, 2]\n\
         disc_sizes = [2, 16, 16, 1]\nseed = 3\n\n[aw]\nalpha1 = 0.45\n\n\
         [output]\ndir = \"unused\"\n",
    )
    .unwrap();
    let out = run(awgan()
        .args(["train", "--config", path.to_str().unwrap()])
        .args(["--seed", "9", "--out", dir.join("o").to_str().unwrap()]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let snapshot =
        std::fs::read_to_string(find_file(&dir.join("o"), "config.toml")).unwrap();
    // flag beats file
    assert!(snapshot.contains("seed = 9"), "{snapshot}");
    // file beats default
    assert!(snapshot.contains("alpha1 = 0.45"), "{snapshot}");
    assert!(snapshot.contains("iterations = 10"), "{snapshot}");
}

#[test]
fn grid_single_cell_runs() {
    let dir = fresh_dir("grid");
    let out = run(awgan()
        .args(["grid", "--alpha1", "0.5", "--alpha2", "0.75", "--budget", "10"])
        .args(QUICK)
        .args(["--out", dir.to_str().unwrap()]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(find_file(&dir, "grid.csv")).unwrap();
    assert!(csv.starts_with("alpha1,alpha2,valid,coverage,mean_real_logit"));
    assert_eq!(csv.lines().count(), 2);
    assert!(find_file(&dir, "grid.svg").exists());
}

#[test]
fn diagnose_scoregap_emits_files_and_summary() {
    let dir = fresh_dir("scoregap");
    let out = run(awgan()
        .args(["diagnose", "scoregap", "--epochs", "1", "--iters-per-epoch", "5"])
        .args(QUICK)
        .args(["--out", dir.to_str().unwrap()]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("epoch 0:"), "{text}");
    assert!(find_file(&dir, "scoregap.csv").exists());
    assert!(find_file(&dir, "scoregap.svg").exists());
}

#[test]
fn diagnose_angles_reports_fractions() {
    let dir = fresh_dir("angles");
    let out = run(awgan()
        .args(["diagnose", "angles", "--window", "0:20"])
        .args(QUICK)
        .args(["--out", dir.to_str().unwrap()]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("plain: frac angle(g_r,g_f)>90deg"), "{text}");
    assert!(text.contains("aw: frac angle(g_r,g_f)>90deg"), "{text}");
    assert!(find_file(&dir, "angles_plain.csv").exists());
    assert!(find_file(&dir, "angles_aw.svg").exists());
}
