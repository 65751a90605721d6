use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_georabi");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn georabi(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    georabi(&args)
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstdout:\n{}\nstderr:\n{}", o.status.code(), stdout(o), String::from_utf8_lossy(&o.stderr));
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn result(dir: &Path, stem: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap();
    serde_json::from_str::<Value>(&text).unwrap()["result"].clone()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

fn is_empty_or_missing(dir: &Path) -> bool {
    !dir.exists() || std::fs::read_dir(dir).unwrap().next().is_none()
}

#[test]
fn spin_half_tensors_match_closed_form() {
    let tmp = TempDir::new().unwrap();
    ok(&run("qgt", &config("spin_half.toml"), tmp.path(), &[]));
    let r = result(tmp.path(), "qgt");
    let theta: f64 = 0.9;
    let entry = |j: u64, k: u64| {
        r["tensors"].as_array().unwrap().iter().find(|e| e["band"] == "minus" && e["j"] == j && e["k"] == k).unwrap().clone()
    };
    assert!((f(&entry(0, 0)["g"][0][0][0]) - 0.25).abs() < 1e-12);
    assert!((f(&entry(1, 1)["g"][0][0][0]) - 0.25 * theta.sin().powi(2)).abs() < 1e-12);
    assert!((f(&entry(0, 1)["f"][0][0][0]).abs() - 0.5 * theta.sin()).abs() < 1e-12);
    assert!(f(&r["oracle"]["max_relative_deviation"]) < 1e-6);
    assert!(tmp.path().join("qgt_eigenvalues.csv").exists());
}

#[test]
fn unknown_key_is_a_config_error_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "lambda = [0.1, 0.2]\nbogus = 1\n[model]\nname = \"spin_half\"\n");
    let out = tmp.path().join("out");
    let o = run("qgt", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    assert!(is_empty_or_missing(&out));
}

#[test]
fn missing_config_and_bad_ranges_exit_two() {
    assert_eq!(georabi(&["qgt"]).status.code(), Some(2));
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    for text in [
        "lambda = [0.1]\n[model]\nname = \"spin_half\"\n",
        "lambda = [0.1, 0.2]\n[model]\nname = \"no_such_model\"\n",
        "lambda = [0.1, 0.2]\n[model]\nname = \"spin_half\"\n[sim]\ndt_divisor = 4.0\n",
        "lambda = [0.1, 0.2]\n[model]\nname = \"spin_half\"\nsettings = { mass = 1.0 }\n",
    ] {
        let o = run("qgt", &write_config(&tmp, text), &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(is_empty_or_missing(&out));
    }
}

#[test]
fn strong_drive_needs_force() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "lambda = [0.9, 0.4]\n[model]\nname = \"spin_half\"\n[drive]\namplitude_ratio = 0.2\n");
    let out = tmp.path().join("out");
    assert_eq!(run("rabi", &cfg, &out, &[]).status.code(), Some(2));
    assert!(is_empty_or_missing(&out));
}

#[test]
fn gap_collapse_is_a_physics_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "lambda = [0.0, 0.0, 3.141592653589793, 3.141592653589793]\n[model]\nname = \"dirac4\"\nsettings = { mass = 0.0 }\n",
    );
    let out = tmp.path().join("out");
    let o = run("qgt", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(is_empty_or_missing(&out));
}

#[test]
fn commensurate_pairs_are_a_protocol_failure() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "lambda = [0.0]\n[model]\nname = \"pairs\"\nsettings = { gap = 2.0, q = [0.4, 0.1] }\n\
         [protocol]\neven = [1]\nodd = [0]\nfrequencies = \"geometry\"\nt_max = 3000.0\n",
    );
    let out = tmp.path().join("out");
    assert_eq!(run("prep", &cfg, &out, &[]).status.code(), Some(4));
    assert!(is_empty_or_missing(&out));
}

#[test]
fn two_tone_rabi_resolves_both_pairs() {
    let tmp = TempDir::new().unwrap();
    ok(&run("rabi", &config("generic.toml"), tmp.path(), &[]));
    let rabi = result(tmp.path(), "rabi");
    assert_eq!(rabi["peak_count"], 2);
    for e in rabi["relative_errors"].as_array().unwrap() {
        assert!(f(e) < 0.01);
    }
}

#[test]
fn single_drive_rabi_lines_match_qgt() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "lambda = [0.7, 0.3, 1.1, -0.4]\n[model]\nname = \"dirac4_generic\"\n[drive]\nj = 1\n");
    let out = tmp.path().join("out");
    ok(&run("qgt", &cfg, &out, &[]));
    ok(&run("rabi", &cfg, &out, &[]));
    let qgt = result(&out, "qgt");
    let rabi = result(&out, "rabi");
    let spectrum = qgt["spectra"].as_array().unwrap().iter().find(|s| s["band"] == "minus" && s["j"] == 1).unwrap();
    let mut expected: Vec<f64> = spectrum["eigenvalues"].as_array().unwrap().iter().map(f).collect();
    expected.sort_by(|a, b| b.total_cmp(a));
    let inferred: Vec<f64> = rabi["spectrum"]["inferred_q"].as_array().unwrap().iter().map(f).collect();
    assert_eq!(inferred.len(), 2);
    for (q, e) in inferred.iter().zip(&expected) {
        assert!((q - e).abs() / e < 0.01, "{q} vs {e}");
    }
    let trace = std::fs::read_to_string(out.join("rabi_trace.csv")).unwrap();
    assert!(trace.starts_with("t,pop_minus,pop_plus\n"));
}

#[test]
fn preparation_echoes_the_plan() {
    let tmp = TempDir::new().unwrap();
    let o = run("prep", &config("prep_pi.toml"), tmp.path(), &[]);
    ok(&o);
    let text = stdout(&o);
    let plan_line = text.lines().find(|l| l.starts_with("plan:")).unwrap();
    assert!(plan_line.contains("n = 3"), "{plan_line}");
    let r = result(tmp.path(), "prep");
    let plan = &r["outcome"]["plan"];
    // Amplitude 0.02 * gap and q = 0.3 / pi^2 for the slow pair.
    let slow = 0.04 * (0.3f64).sqrt() / std::f64::consts::PI;
    assert!((f(&plan["duration"]) - 3.0 * std::f64::consts::PI / slow).abs() / f(&plan["duration"]) < 1e-4);
    assert!((f(&plan["predicted_fidelity"]) - 0.973).abs() < 1e-3);
    assert!((f(&r["outcome"]["fidelity"]) - 0.973).abs() < 1e-3);
}

#[test]
fn landau_zener_reports_fit() {
    let tmp = TempDir::new().unwrap();
    ok(&run("lz", &config("generic.toml"), tmp.path(), &[]));
    let fit = &result(tmp.path(), "lz")["fit"];
    assert!(f(&fit["relative_error"]) < 0.01);
    assert!(f(&fit["residual"]).is_finite());
    assert!(fit["cross_check_deviation"].as_f64().is_some());
    let csv = std::fs::read_to_string(tmp.path().join("lz_sweeps.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn tomography_and_extraction_recover_the_geometry() {
    let tmp = TempDir::new().unwrap();
    ok(&run("tomo", &config("generic.toml"), tmp.path(), &[]));
    ok(&run("extract", &config("generic.toml"), tmp.path(), &[]));
    assert!(f(&result(tmp.path(), "tomo")["magnitude_error"]) < 1e-6);
    let rep = &result(tmp.path(), "extract")["report"];
    assert!(f(&rep["metric_error"]) < 1e-2);
    assert!(f(&rep["curvature_error"]) < 1e-2);
}

#[test]
fn closed_gap_hides_the_rabi_line() {
    let tmp = TempDir::new().unwrap();
    ok(&run("check-rwa", &config("weyl_path.toml"), tmp.path(), &["--jobs", "2"]));
    let r = result(tmp.path(), "check_rwa");
    let points = r["report"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 4);
    assert_eq!(points[0]["rabi_peak_visible"], true);
    let hidden: Vec<u64> = r["hidden_rabi_peaks"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(hidden, vec![1, 2, 3]);
}

fn without_timestamp(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].starts_with("  \"generated_at\""));
    lines.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, l)| *l).collect::<Vec<_>>().join("\n")
}

#[test]
fn repeated_runs_are_identical_apart_from_the_timestamp() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let extra = ["--seed", "17"];
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "lambda = [0.7, 0.3, 1.1, -0.4]\n[model]\nname = \"dirac4_generic\"\n[drive]\nj = 0\nk = 2\n\
         [protocol]\nmeasure_mode = \"sample\"\nshots = 2000\n",
    );
    ok(&run("tomo", &cfg, a.path(), &extra));
    ok(&run("tomo", &cfg, b.path(), &extra));
    assert_eq!(without_timestamp(&a.path().join("tomo.json")), without_timestamp(&b.path().join("tomo.json")));
    let csv = |d: &TempDir| std::fs::read(d.path().join("tomo_entries.csv")).unwrap();
    assert_eq!(csv(&a), csv(&b));

    let (c, d) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(&run("check-rwa", &config("weyl_path.toml"), c.path(), &["--jobs", "1"]));
    ok(&run("check-rwa", &config("weyl_path.toml"), d.path(), &["--jobs", "4"]));
    assert_eq!(without_timestamp(&c.path().join("check_rwa.json")), without_timestamp(&d.path().join("check_rwa.json")));
}

#[test]
fn floats_are_written_with_seventeen_digits() {
    let tmp = TempDir::new().unwrap();
    ok(&run("qgt", &config("spin_half.toml"), tmp.path(), &[]));
    let text = std::fs::read_to_string(tmp.path().join("qgt.json")).unwrap();
    let gap = text.lines().find(|l| l.trim_start().starts_with("\"gap\": 1")).unwrap();
    let token = gap.trim().trim_start_matches("\"gap\": ").trim_end_matches(',');
    let (mantissa, exponent) = token.split_once('e').unwrap();
    assert_eq!(mantissa.split_once('.').unwrap().1.len(), 16, "{token}");
    assert_eq!(exponent, "0");
    assert!((token.parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    let hash = serde_json::from_str::<Value>(&text).unwrap()["config_hash"].as_str().unwrap().to_string();
    assert!(hash.starts_with("sha256:") && hash.len() == 7 + 64);
}

#[test]
fn selftest_passes_and_detects_injected_failure() {
    let a = georabi(&["selftest"]);
    ok(&a);
    let hash = |o: &Output| stdout(o).lines().find(|l| l.starts_with("report hash")).unwrap().to_string();
    assert_eq!(hash(&a), hash(&georabi(&["selftest"])));
    assert_eq!(stdout(&a).lines().filter(|l| l.starts_with("PASS")).count(), 10);

    let bad = georabi(&["selftest", "--inject-failure", "two_tone_identities"]);
    assert_eq!(bad.status.code(), Some(5));
    assert!(stdout(&bad).lines().any(|l| l.starts_with("FAIL two_tone_identities")));
    assert_ne!(hash(&a), hash(&bad));
    assert_eq!(georabi(&["selftest", "--inject-failure", "nope"]).status.code(), Some(2));
}
