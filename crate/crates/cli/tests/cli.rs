use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn hpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpr"))
        .args(args)
        .output()
        .expect("hpr runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// Rows of a CSV written by `hpr`, without the `#` preamble and header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let header: Vec<&str> = text.lines().find(|l| !l.starts_with('#')).unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(path).into_iter().map(|r| r[idx].clone()).collect()
}

fn out_arg(dir: &Path, sub: &str) -> String {
    dir.join(sub).to_str().unwrap().to_string()
}

#[test]
fn algebra_check_is_fast_and_clean() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = hpr(&["algebra-check", "--out", &out_arg(dir.path(), "alg")]);
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sedenion"));
    let table = rows(&dir.path().join("alg/summary.csv"));
    assert_eq!(table.len(), 5);
    assert!(!table[4].last().unwrap().is_empty(), "sedenion zero-divisor witness");
}

#[test]
fn usage_and_config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(hpr(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(hpr(&["phase-transition", "--trials", "many"]).status.code(), Some(2));
    let bad = write_spec(dir.path(), "bad.toml", "seed = 1\nbogus = true\n");
    assert_eq!(hpr(&["phase-transition", "--spec", &bad]).status.code(), Some(2));
    let wrong_kind = write_spec(dir.path(), "kind.toml", "kind = \"noise_sweep\"\n");
    assert_eq!(hpr(&["coding-sweep", "--spec", &wrong_kind]).status.code(), Some(2));
    let missing = write_spec(
        dir.path(),
        "img.toml",
        "[image]\npath = \"nowhere.ppm\"\n",
    );
    let out = hpr(&["recover-image", "--spec", &missing, "--out", &out_arg(dir.path(), "img")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.ppm"));
    assert_eq!(hpr(&["algebra-check", "--threads", "0"]).status.code(), Some(2));
}

#[test]
fn single_coefficient_single_trial_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "one.toml",
        "trace = true\n[ensemble]\nn = 1\n[grid]\nratios = [8]\n",
    );
    let out = hpr(&["phase-transition", "--spec", &spec, "--out", &out_arg(dir.path(), "one")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trials = dir.path().join("one/trials.csv");
    assert_eq!(column(&trials, "success"), vec!["true"]);
    assert!(dir.path().join("one/trace_0_0.csv").exists());
    let summary = fs::read_to_string(dir.path().join("one/summary.csv")).unwrap();
    assert!(summary.starts_with("# hpr "));
    assert!(summary.contains("# spec_sha256: "));
    assert!(summary.contains("hamilton"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "pt.toml",
        "seed = 7\ntrials = 3\n[ensemble]\nn = 8\n[grid]\nratios = [3, 8]\n",
    );
    for (threads, sub) in [("1", "a"), ("2", "b")] {
        let out = hpr(&["phase-transition", "--spec", &spec, "--threads", threads, "--out", &out_arg(dir.path(), sub)]);
        assert!(matches!(out.status.code(), Some(0) | Some(1)));
    }
    for file in ["summary.csv", "trials.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between thread counts");
    }
    let out = hpr(&["phase-transition", "--spec", &spec, "--seed", "8", "--out", &out_arg(dir.path(), "c")]);
    assert!(out.status.code().is_some());
    let seeds_a = column(&dir.path().join("a/trials.csv"), "seed");
    let seeds_c = column(&dir.path().join("c/trials.csv"), "seed");
    assert_ne!(seeds_a, seeds_c);
}

#[test]
fn noiseless_column_matches_the_phase_transition() {
    let dir = tempfile::tempdir().unwrap();
    let common = "seed = 3\ntrials = 2\n[ensemble]\nn = 6\n[grid]\nratios = [4, 10]\nsnr_db = [10, inf]\n";
    let spec = write_spec(dir.path(), "s.toml", common);
    let noise = hpr(&["noise-sweep", "--spec", &spec, "--out", &out_arg(dir.path(), "noise")]);
    assert!(noise.status.code().is_some());
    let phase = hpr(&["phase-transition", "--spec", &spec, "--out", &out_arg(dir.path(), "phase")]);
    assert!(phase.status.code().is_some());
    let noise_rows = rows(&dir.path().join("noise/trials.csv"));
    let phase_rel = column(&dir.path().join("phase/trials.csv"), "relative_distance");
    let snr_col = column(&dir.path().join("noise/trials.csv"), "snr_db");
    let noise_rel = column(&dir.path().join("noise/trials.csv"), "relative_distance");
    let clean: Vec<String> = noise_rel
        .iter()
        .zip(&snr_col)
        .filter(|(_, s)| *s == "inf")
        .map(|(r, _)| r.clone())
        .collect();
    assert_eq!(noise_rows.len(), 8);
    assert_eq!(clean, phase_rel);
}

#[test]
fn rgb_patches_recover_above_forty_db() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "rgb.toml",
        &format!(
            "[ensemble]\nlevel = \"quaternion\"\n[image]\npath = \"{}\"\npatch = 8\nratio = 15\nbaseline = false\n",
            data("rgb16.ppm").display()
        ),
    );
    let out = hpr(&["recover-image", "--spec", &spec, "--out", &out_arg(dir.path(), "rgb")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let psnr: f64 = column(&dir.path().join("rgb/summary.csv"), "psnr_db")[0].parse().unwrap();
    assert!(psnr > 40.0, "PSNR {psnr}");
    assert_eq!(column(&dir.path().join("rgb/patches.csv"), "psnr_db").len(), 4);
    let recon = fs::read(dir.path().join("rgb/reconstruction.ppm")).unwrap();
    assert_eq!(recon, fs::read(data("rgb16.ppm")).unwrap(), "exact recovery round-trips the bytes");
}

#[test]
fn band_stack_output_is_a_readable_stack() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("img");
    fs::create_dir_all(&img).unwrap();
    let mut manifest = String::new();
    for b in 0..8u8 {
        let mut bytes = b"P5\n3 2\n255\n".to_vec();
        bytes.extend((0..6u8).map(|p| 20 + 25 * b + 3 * p));
        fs::write(img.join(format!("b{b}.pgm")), bytes).unwrap();
        manifest.push_str(&format!("b{b}.pgm\n"));
    }
    fs::write(img.join("stack.txt"), manifest).unwrap();
    let spec = write_spec(
        dir.path(),
        "ms.toml",
        "[ensemble]\nlevel = \"octonion\"\n[image]\npath = \"img/stack.txt\"\npatch = 2\nratio = 25\n",
    );
    let out = hpr(&["recover-image", "--spec", &spec, "--out", &out_arg(dir.path(), "ms")]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&out.stderr));
    let methods = column(&dir.path().join("ms/summary.csv"), "method");
    assert_eq!(methods, vec!["owf", "per_band_real_wf"]);
    let listed = fs::read_to_string(dir.path().join("ms/reconstruction.txt")).unwrap();
    let bands: Vec<&str> = listed.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(bands.len(), 8);
    for b in bands {
        assert!(dir.path().join("ms").join(b).exists());
    }
    assert!(dir.path().join("ms/baseline.txt").exists());
}
