use std::path::Path;
use std::process::{Command, Output};

use cascadesim::cli::run_with;
use cascadesim::trigger::rate_b2_closed;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascadesim")).args(args).output().unwrap()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cascadesim").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn model_matches_closed_form() {
    let (code, out, _) = run(&["model", "--n", "2", "--b", "2", "--eta", "1.59e-4", "--mu", "8000", "--freq", "1e6"]);
    assert_eq!(code, 0);
    let want = rate_b2_closed(1e6, 8000.0, 1.59e-4, 0.0);
    assert!((value(&out, "rate") / want - 1.0).abs() < 1e-8);
    assert!((value(&out, "rate") - 2.2e5).abs() < 0.05e5);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["model", "--no-such-flag"]).0, 2);
    assert_eq!(run(&["model", "--eta", "abc"]).0, 2);
    let out = bin(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn help_lists_flags_for_every_subcommand() {
    let expected: [(&str, &[&str]); 5] = [
        ("model", &["--eta", "--gamma", "--curve", "--mu-min"]),
        ("mc", &["--pulses", "--seed", "--mu-list"]),
        ("fit", &["--regime", "--fit-gamma", "--eta-min"]),
        ("map", &["--fwhm", "--dead", "--norm", "--out-dir"]),
        ("cascade", &["--bias", "--armed", "--dt", "--bias-min"]),
    ];
    for (sub, flags) in expected {
        let (code, out, _) = run(&[sub, "--help"]);
        assert_eq!(code, 0, "{sub}");
        for f in flags {
            assert!(out.contains(f), "{sub} --help lacks {f}");
        }
        assert!(out.contains("--config") && out.contains("--threads"));
    }
}

#[test]
fn missing_fit_input_is_reported() {
    let (code, _, err) = run(&["fit", "missing.csv"]);
    assert_eq!(code, 1);
    assert!(err.contains("not found") && err.contains("missing.csv"), "{err}");
}

#[test]
fn malformed_row_names_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "flux,counts\nabc,10\n").unwrap();
    let (code, _, err) = run(&["fit", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");
}

fn model_curve(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let p = dir.join("curve.csv");
    let mut args = vec!["model", "--curve", "--points", "15", "-o", p.to_str().unwrap()];
    args.extend_from_slice(extra);
    assert_eq!(run(&args).0, 0);
    p
}

#[test]
fn model_curve_fits_back_with_sidecar_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = model_curve(dir.path(), &["--b", "1", "--eta", "7.5e-4", "--mu-min", "1", "--mu-max", "1e4"]);
    let mut sidecar = p.clone().into_os_string();
    sidecar.push(".cfg");
    std::fs::write(&sidecar, "regime = single_pixel\nfreq = 1e6\n").unwrap();
    let (code, out, err) = run(&["fit", p.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json["regime"], "single_pixel");
    assert_eq!(json["n_points"], 15);
    assert!((json["eta"].as_f64().unwrap() / 7.5e-4 - 1.0).abs() < 1e-6);
    for key in ["eta", "gamma", "r_squared", "n_points", "regime"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn flags_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "eta = 0.5\nmu = 3\nb = 1\nn = 1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let (_, from_file, _) = run(&["--config", c, "model"]);
    assert_eq!(value(&from_file, "eta"), 0.5);
    assert_eq!(value(&from_file, "probability"), 0.875);
    let (_, overridden, _) = run(&["--config", c, "model", "--eta", "0.25"]);
    assert_eq!(value(&overridden, "eta"), 0.25);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "etta = 0.5\n").unwrap();
    let (code, _, err) = run(&["--config", cfg.to_str().unwrap(), "model"]);
    assert_eq!(code, 2);
    assert!(err.contains("etta"), "{err}");
}

#[test]
fn fixed_photon_number_must_be_integral() {
    let (code, _, err) = run(&["model", "--mu", "2.5"]);
    assert_eq!(code, 2, "{err}");
    assert_eq!(run(&["model", "--mu", "2.5", "--poisson"]).0, 0);
}

#[test]
fn threads_flag_and_env_fallback() {
    let args = ["mc", "--pulses", "200000", "--seed", "7", "--mu", "10", "--eta", "0.1"];
    let base = bin(&args);
    let mut with_flag = vec!["--threads", "2"];
    with_flag.extend_from_slice(&args);
    let flagged = bin(&with_flag);
    let env = Command::new(env!("CARGO_BIN_EXE_cascadesim"))
        .args(args)
        .env("CASCADESIM_THREADS", "3")
        .output()
        .unwrap();
    assert!(base.status.success());
    assert_eq!(base.stdout, flagged.stdout);
    assert_eq!(base.stdout, env.stdout);
    assert_eq!(run(&["--threads", "0", "model"]).0, 2);
}

#[test]
fn map_writes_csv_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, err) = run(&["map", "--b", "1", "--mu", "25", "--eta", "7.5e-4", "--out-dir", d, "--norm", "log", "--name", "m"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("argmax_region = on_pixel"), "{out}");
    let pgm = std::fs::read(dir.path().join("m.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n80 80\n255\n"));
    assert_eq!(pgm.len(), "P5\n80 80\n255\n".len() + 80 * 80);
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 80);
    assert!(rows.iter().all(|r| r.split(',').count() == 80));
}

#[test]
fn cascade_trace_columns_and_sweep() {
    let (code, out, _) = run(&["cascade", "--bias", "0.9", "--every", "50"]);
    assert_eq!(code, 0);
    let header = out.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "time,i_wire_0,i_wire_1,i_wire_2,i_shunt");
    let (code, out, _) = run(&["cascade", "--bias-min", "0.3", "--bias-max", "0.5", "--bias-steps", "3"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "bias,latency");
    assert!(rows[1..].iter().all(|r| r.ends_with(",nan")), "{out}");
    assert_eq!(run(&["cascade", "--bias-min", "0.3"]).0, 2);
}
