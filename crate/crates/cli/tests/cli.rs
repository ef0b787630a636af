use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fkp_core::fieldfile::load_field;

fn fkp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkp"))
        .args(args)
        .env_remove("FKP_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_solve(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", "--n", "128", "--l", "32", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    fkp(&args)
}

#[test]
fn solve_writes_field_log_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = small_solve(&out, &["--alpha", "2", "--c", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let log = fs::read_to_string(out.join("iterations.csv")).unwrap();
    assert!(!log.contains('\r'));
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("iter,iter_error,m_factor,factor_error,residual"));
    let last: Vec<f64> = log.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(last[1..].iter().all(|v| v.is_finite()));
    assert!(last[1] <= 1e-5 && last[3] <= 1e-5 && last[4] <= 1e-5);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "converged");
    assert_eq!(manifest["config"]["n"], 128);
    assert_eq!(manifest["config"]["sigma"], -1.0);
    assert!(manifest["software_version"].is_string());
    assert!(!manifest["timings"].as_array().unwrap().is_empty());
    for entry in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(entry["path"].as_str().unwrap()).exists(), "{entry}");
    }

    let (phi, meta) = load_field(out.join("field.fkpl")).unwrap();
    assert_eq!(phi.grid().nx(), 128);
    assert_eq!((meta.alpha, meta.c, meta.sigma), (2.0, 1.0, -1.0));
}

#[test]
fn identical_runs_give_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(small_solve(&a, &["--alpha", "1.7"]).status.code(), Some(0));
    assert_eq!(small_solve(&b, &["--alpha", "1.7"]).status.code(), Some(0));
    assert_eq!(
        fs::read(a.join("iterations.csv")).unwrap(),
        fs::read(b.join("iterations.csv")).unwrap()
    );
    assert_eq!(fs::read(a.join("field.fkpl")).unwrap(), fs::read(b.join("field.fkpl")).unwrap());
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");

    let o = small_solve(&out, &["--alpha", "0.7"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`alpha`"), "{}", stderr(&o));

    let o = small_solve(&out, &["--sigma", "+1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`sigma`"), "{}", stderr(&o));

    let o = small_solve(&out, &["--max-iter", "3"]);
    assert_eq!(o.status.code(), Some(2));

    let o = small_solve(&out, &["--alpha", "0.7", "--allow-supercritical", "--max-iter", "2"]);
    assert!(matches!(o.status.code(), Some(2 | 3)), "{:?}", o.status);

    let o = small_solve(&out, &["--nu", "0", "--seed-amplitude", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    for (flag, value) in [("--tol", "abc"), ("--c", "0"), ("--seed", "uniform"), ("--nu", "nan")] {
        let o = small_solve(&out, &[flag, value]);
        assert_eq!(o.status.code(), Some(1), "{flag} {value}");
        assert!(stderr(&o).contains(&format!("`{}`", &flag[2..])), "{}", stderr(&o));
    }

    assert_eq!(fkp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fkp(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("o");
    fs::write(&cfg, "# small run\nalpha = 1.7\nn = 128\nl = 32\nmax-iter = 3\n").unwrap();
    let o = fkp(&["solve", "--config", cfg.to_str().unwrap(), "--max-iter", "300", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["alpha"], 1.7);
    assert_eq!(manifest["config"]["max_iter"], 300);

    fs::write(&cfg, "alpha = 1.7\nspeed = 2\n").unwrap();
    let o = fkp(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`speed`"));
}

#[test]
fn file_seed_must_match_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref");
    let o = fkp(&["reference", "--n", "128", "--l", "32", "--out", reference.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let seed = format!("file:{}", reference.join("exact_kp1.fkpl").display());

    let out = dir.path().join("s");
    let o = small_solve(&out, &["--seed", &seed]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = fkp(&["solve", "--n", "64", "--l", "32", "--seed", &seed, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("grid-mismatch"), "{}", stderr(&o));
}

#[test]
fn analyze_reports_sections_decay_and_functionals() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref");
    assert_eq!(fkp(&["reference", "--n", "256", "--l", "64", "--out", reference.to_str().unwrap()]).status.code(), Some(0));
    let out = dir.path().join("an");
    let o = fkp(&[
        "analyze",
        reference.join("exact_kp1.fkpl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--offsets",
        "0,-2,3.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let section = fs::read_to_string(out.join("section_x.csv")).unwrap();
    assert_eq!(section.lines().next(), Some("offset,x,phi"));
    assert_eq!(section.lines().count(), 1 + 3 * 256);
    let peak = section
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
        .find(|r| r[0] == 0.0 && r[1] == 0.0)
        .unwrap();
    assert_eq!(peak[2], 8.0);

    let kv: std::collections::HashMap<String, f64> = fs::read_to_string(out.join("functionals.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.parse().unwrap())
        })
        .collect();
    for key in ["residual", "l_value", "n_value", "energy_norm", "sobolev_ratio", "fourier_tail", "plateau_x", "plateau_y"] {
        assert!(kv[key].is_finite(), "{key}");
    }
    assert_eq!(kv["max_abs"], 8.0);
    // r²φ → −24 along x and +24 along y for the exact lump
    assert!((kv["plateau_x"] + 24.0).abs() < 1.0, "{}", kv["plateau_x"]);
    assert!((kv["plateau_y"] - 24.0).abs() < 1.0, "{}", kv["plateau_y"]);

    let symmetry = fs::read_to_string(out.join("symmetry.txt")).unwrap();
    for line in symmetry.lines() {
        let v: f64 = line.split_once('=').unwrap().1.parse().unwrap();
        assert!(v <= 1e-12, "{line}");
    }
    assert!(out.join("decay_x.csv").exists() && out.join("decay_y.csv").exists());
}

#[test]
fn analyze_names_the_format_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("an");
    let header_only = dir.path().join("h.fkpl");
    let mut bytes = b"FKPL".to_vec();
    bytes.extend_from_slice(&1u32.to_le_bytes());
    bytes.extend_from_slice(&8u32.to_le_bytes());
    bytes.extend_from_slice(&8u32.to_le_bytes());
    for v in [1.0f64, 1.0, 2.0, 1.0, -1.0] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&header_only, &bytes).unwrap();
    let o = fkp(&["analyze", header_only.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[truncated]") && stderr(&o).contains("offset 56"), "{}", stderr(&o));

    bytes[..4].copy_from_slice(b"NOPE");
    fs::write(&header_only, &bytes).unwrap();
    let o = fkp(&["analyze", header_only.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(stderr(&o).contains("[magic-mismatch]"), "{}", stderr(&o));
}

#[test]
fn kernel_probe_rows_carry_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kp");
    let o = fkp(&["kernel-probe", "--alpha", "1.5", "--p", "1.9,2.1", "--which", "h", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("probe.csv")).unwrap();
    let verdicts: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(verdicts, ["converging", "diverging"]);

    let o = fkp(&["kernel-probe", "--alpha", "1.5", "--p", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = fkp(&["kernel-probe", "--alpha", "1.5", "--p", "2", "--which", "k", "--out", out.to_str().unwrap()]);
    assert!(stderr(&o).contains("`which`"));
}

#[test]
fn convergence_study_error_shrinks_with_the_domain() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cs");
    let o = fkp(&["convergence-study", "--l-list", "16,32", "--dx", "0.25", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("convergence.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0][1], rows[1][1]), ("128", "256"));
    let e: Vec<f64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    assert!(e[1] < e[0], "{e:?}");

    let o = fkp(&["convergence-study", "--l-list", "16,20", "--dx", "0.25", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`l-list`"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_fkp"))
            .args(["reference", "--n", "64", "--l", "16", "--out", out.to_str().unwrap()])
            .env("FKP_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    let o = run("zero");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FKP_THREADS"));
}
