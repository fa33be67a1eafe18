use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dpo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpo"))
        .args(args)
        .env_remove("DPO_THREADS")
        .output()
        .expect("spawn dpo")
}

fn stdout(args: &[&str]) -> String {
    let o = dpo(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

/// Cell-wise equality, floats to 1e-12 relative.
fn assert_csv_close(got: &str, want: &str) {
    let (g, w): (Vec<_>, Vec<_>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(g.len(), w.len());
    assert_eq!(g[0], w[0]);
    for (lg, lw) in g.iter().zip(&w).skip(1) {
        for (a, b) in lg.split(',').zip(lw.split(',')) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-12 * y.abs().max(1e-300), "{lg} vs {lw}"),
                _ => assert_eq!(a, b),
            }
        }
    }
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let i = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().parse().unwrap()).collect()
}

fn error_json(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii()).expect("stderr is one JSON object")
}

#[test]
fn semiclassical_matches_golden() {
    let got = stdout(&["semiclassical", "--eps-start", "0", "--eps-stop", "2", "--eps-step", "0.25"]);
    assert_eq!(got, golden("semiclassical.csv"));
}

#[test]
fn fp_moments_matches_golden() {
    let got = stdout(&["fp-moments", "--x", "12.5", "--eps-start", "0", "--eps-stop", "2", "--eps-step", "0.5"]);
    assert_csv_close(&got, &golden("fp_moments.csv"));
}

#[test]
fn json_mirrors_csv() {
    let args = ["self-consistent", "--x", "12.5", "--eps-step", "0.5"];
    let csv = stdout(&args);
    let json: Value = serde_json::from_str(&stdout(&[&args[..], &["--format", "json"]].concat())).unwrap();
    let rows = json.as_array().unwrap();
    let n = column(&csv, "n_phot");
    assert_eq!(rows.len(), n.len());
    for (r, n) in rows.iter().zip(n) {
        assert_eq!(r["n_phot"].as_f64().unwrap(), n);
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\nstpe = 0.1\n").unwrap();
    let cases: [Vec<&str>; 4] = [
        vec!["--config", bad.to_str().unwrap(), "semiclassical"],
        vec!["fp-moments"],
        vec!["self-consistent", "--x", "12.5", "--eps-step=-0.1"],
        vec!["compare", "--methods", "fp-moments,lindblad", "--x", "10", "--kappa", "1", "--gamma", "1", "--g", "0.1"],
    ];
    for args in cases {
        let o = dpo(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&o)["error"], "config");
    }
    let o = dpo(&["--config", "/nonexistent/dpo.toml", "semiclassical"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_3_with_eps() {
    let o = dpo(&["fp-moments", "--x", "1e7", "--eps-start", "0.5", "--eps-stop", "2.5", "--eps-step", "0.25"]);
    assert_eq!(o.status.code(), Some(3));
    let e = error_json(&o);
    assert_eq!(e["error"], "numerical");
    // first failing grid point, whatever the thread schedule
    assert_eq!(e["eps"], 1.0);

    let o = dpo(&[
        "sde", "--x", "12.5", "--eps-start", "0.5", "--eps-stop", "0.5", "--n-traj", "20",
        "--divergence-radius", "0.01", "--t-burn", "1", "--t-total", "2",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["eps"], 0.5);
}

#[test]
fn sde_reruns_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        stdout(&[
            "sde", "--x", "12.5", "--eps-start", "0.5", "--eps-stop", "1.5", "--eps-step", "0.5",
            "--n-traj", "200", "--t-burn", "5", "--t-total", "15", "--seed", "11",
            "--threads", threads, "--out", out.to_str().unwrap(),
        ]);
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "1");
    assert_eq!(a, run("b.csv", "1"));
    assert_eq!(a, run("c.csv", "4"));
    assert!(!a.is_empty());
}

#[test]
fn fp_sweep_flags_undershoot_at_moderate_x() {
    let csv = stdout(&["fp-moments", "--x", "12.5", "--eps-start", "1.05", "--eps-stop", "2", "--eps-step", "0.05"]);
    assert!(csv.lines().skip(1).any(|l| l.contains(",true,")));
}

#[test]
fn compare_semiclassical_and_series_at_large_x() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    stdout(&[
        "compare", "--methods", "semiclassical,fp-moments", "--x", "50", "--exclude", "0.8,1.2",
        "--eps-start", "0", "--eps-stop", "3", "--eps-step", "0.05", "--out", out.to_str().unwrap(),
    ]);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("cmp.summary.json")).unwrap()).unwrap();
    let d = &summary["deviations"][0];
    assert!(d["max_abs_n_phot"].as_f64().unwrap() <= 0.05, "{d}");
    assert_eq!(d["points"], 61 - 7);
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(column(&table, "eps").len(), 61);
}

#[test]
fn compare_series_and_self_consistent_far_above_threshold() {
    let json: Value = serde_json::from_str(&stdout(&[
        "compare", "--methods", "fp-moments,self-consistent", "--x", "12.5",
        "--eps-start", "2.75", "--eps-stop", "2.75", "--format", "json",
    ]))
    .unwrap();
    let rel = json["deviations"][0]["max_rel_n_phot"].as_f64().unwrap();
    assert!(rel <= 0.02, "{rel}");
    assert_eq!(json["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn compare_with_master_equation_plumbing() {
    let json: Value = serde_json::from_str(&stdout(&[
        "compare", "--methods", "lindblad,fp-moments", "--kappa", "1", "--gamma", "1", "--g", "0.1",
        "--nphot-dim", "16", "--nphon-dim", "8", "--eps-start", "0.5", "--eps-stop", "0.5", "--format", "json",
    ]))
    .unwrap();
    assert!((json["x"].as_f64().unwrap() - 12.5).abs() < 1e-12);
    let rel = json["deviations"][0]["max_rel_n_phot"].as_f64().unwrap();
    assert!(rel < 0.1, "{rel}");
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "format = \"json\"\n[grid]\nstart = 0.5\nstop = 1.0\nstep = 0.5\n[scaled]\nx = 50.0\n").unwrap();
    let c = cfg.to_str().unwrap();
    let json: Value = serde_json::from_str(&stdout(&["--config", c, "fp-moments"])).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert_eq!(json[0]["x"], 50.0);
    let csv = stdout(&["--config", c, "--format", "csv", "fp-moments", "--x", "12.5"]);
    assert_eq!(column(&csv, "x"), [12.5, 12.5]);
}

#[test]
fn lindblad_single_drive_and_shanks_rows() {
    let csv = stdout(&[
        "lindblad-ss", "--kappa", "1", "--gamma", "1", "--g", "0.1", "--drive", "0.75", "--shanks", "4,5,6",
    ]);
    let kinds: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(kinds, ["raw", "raw", "raw", "shanks"]);
    assert_eq!(column(&csv, "eps")[0], 0.6);
}

#[test]
fn qfunc_csv_has_grid_header() {
    let csv = stdout(&[
        "qfunc", "--kappa", "1", "--gamma", "1", "--g", "0.1", "--drive", "0.5",
        "--nphot-dim", "12", "--nphon-dim", "4", "--half-width", "2", "--step", "0.5",
    ]);
    let first = csv.lines().next().unwrap();
    assert!(first.starts_with("# re_min=-2 re_max=2"), "{first}");
    assert!(first.contains("n_re=9 n_im=9"));
    assert_eq!(column(&csv, "q").len(), 81);
}

#[test]
fn plot_hint_names_the_data_file() {
    let dir = tempfile::tempdir().unwrap();
    let (out, hint) = (dir.path().join("sc.csv"), dir.path().join("sc.gp"));
    stdout(&[
        "--out", out.to_str().unwrap(), "--plot-hint", hint.to_str().unwrap(), "semiclassical", "--eps-step", "0.5",
    ]);
    let gp = std::fs::read_to_string(hint).unwrap();
    assert!(gp.contains(out.to_str().unwrap()));
    assert!(gp.contains("using 1:"));
}
