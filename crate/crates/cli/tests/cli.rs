use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spherevortex"));
    c.env_remove("SPHEREVORTEX_OUTPUT");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--output-dir").arg(dir).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let mut cfg: Value = serde_json::from_str(include_str!("../config/default.json")).unwrap();
    cfg["grid"] = serde_json::json!({"n_theta": 32, "n_phi": 64});
    let p = dir.join("small.json");
    std::fs::write(&p, cfg.to_string()).unwrap();
    p
}

#[test]
fn gamma_one_scale_is_tau_epsilon() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["scale", "solve", "--gamma", "1", "--epsilon", "1e-3", "--kappa", "1"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    let s = v["s"].as_f64().unwrap();
    assert!((s - 2.404825557695773e-3).abs() < 1e-12, "{s}");
    let gs = stdout_json(&run(d.path(), &["ground-state", "solve", "--gamma", "1"]));
    assert_eq!(s, gs["r_support"].as_f64().unwrap() * 1e-3);
    assert!(d.path().join("scale-solve.json").exists());
}

#[test]
fn verify_kernels_on_default_config() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["verify", "--suite", "kernels"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 5 && text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn malformed_config_exits_two_with_one_line() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.json");
    std::fs::write(&p, "{\"system\": [").unwrap();
    let o = run(d.path(), &["--config", p.to_str().unwrap(), "verify", "--suite", "kernels"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(d.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(d.path(), &["construct", "--epsilon", "0.9"]).status.code(), Some(2));
    let o = run(d.path(), &["kernel", "eval", "--z", "0,1", "--zp", "1,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(d.path(), &["solve", "--n-phi", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_one() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["kernel", "eval", "--z", "1,1", "--zp", "1,1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_env_overrides_config() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spherevortex"))
        .env("SPHEREVORTEX_OUTPUT", d.path())
        .args(["ground-state", "solve", "--gamma", "2"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let csv = std::fs::read_to_string(d.path().join("ground_state.csv")).unwrap();
    assert!(csv.starts_with("r,w\n"));
    let v = stdout_json(&o);
    for k in ["gamma", "r_support", "d_boundary", "mass_kappa"] {
        assert!(v[k].is_number(), "{k}");
    }
}

#[test]
fn kernel_eval_prints_json_lines() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["kernel", "eval", "--z", "1.5707963267948966,0", "--zp", "1.5707963267948966,3.141592653589793", "--zp", "1.2,0.1"],
    );
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["G"].as_f64().unwrap().abs() < 1e-14);
    assert!(rows[0]["H"].is_null());
    assert!(rows[1]["H"]["value"].is_number());
}

#[test]
fn kr_and_dynamics_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["kr", "critical"]);
    assert!(o.status.success());
    let crit = d.path().join("critical_system.json");
    let o = run(d.path(), &["kr", "grad", "--system", crit.to_str().unwrap()]);
    assert!(stdout_json(&o)["norm"].as_f64().unwrap() < 1e-10);
    let o = run(d.path(), &["dynamics", "run", "--system", crit.to_str().unwrap(), "--t-end", "2"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert!(v["rigid_drift_deviation"].as_f64().unwrap() < 1e-6);
    let tr = std::fs::read_to_string(d.path().join("trajectory.csv")).unwrap();
    assert!(tr.starts_with("t,index,theta,phi\n"));
}

/// Every non-manifest file in `dir` must be listed by exactly one manifest.
fn manifest_coverage(dir: &Path) {
    let mut count: BTreeMap<String, usize> = BTreeMap::new();
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let name = e.unwrap().file_name().to_string_lossy().into_owned();
        files.push(name);
    }
    for f in files.iter().filter(|f| f.ends_with(".json") && !f.ends_with(".grid.json") && *f != "small.json") {
        let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(f)).unwrap()).unwrap();
        for o in m["outputs"].as_array().unwrap() {
            *count.entry(o.as_str().unwrap().to_string()).or_default() += 1;
        }
    }
    for f in files.iter().filter(|f| !f.ends_with(".json") || f.ends_with(".grid.json")) {
        assert_eq!(count.get(f), Some(&1), "{f}");
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn construct_and_solve_are_deterministic() {
    // same config, same output directory, cleared between runs
    let root = tempfile::tempdir().unwrap();
    let cfg = small_config(root.path());
    let c = cfg.to_str().unwrap();
    let out = root.path().join("out");
    let mut snaps = Vec::new();
    for _ in 0..2 {
        let _ = std::fs::remove_dir_all(&out);
        std::fs::create_dir_all(&out).unwrap();
        let d = out.as_path();
        let o = run(d, &["--threads", "1", "--config", c, "construct", "--fields"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = run(d, &["--threads", "1", "--config", c, "solve"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let prof = std::fs::read_to_string(d.join("solve_e0_profile.csv")).unwrap();
        assert!(prof.starts_with("vortex,r_over_s,scaled_psi,w_gamma\n"));
        let hist = std::fs::read_to_string(d.join("solve_e0_history.csv")).unwrap();
        assert!(hist.starts_with("iter,increment,residual\n"));
        let b = std::fs::read_to_string(d.join("construct_e0_boundary.csv")).unwrap();
        assert!(b.starts_with("vortex,xi,r_measured,r_predicted\n"));
        manifest_coverage(d);
        snaps.push(snapshot(d));
    }
    assert_eq!(snaps[0].keys().collect::<Vec<_>>(), snaps[1].keys().collect::<Vec<_>>());
    for (k, v) in &snaps[0] {
        assert!(v == &snaps[1][k], "{k} differs between runs");
    }
}
