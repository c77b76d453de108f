//! End-to-end runs of the `mfg` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn mfg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("running mfg")
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

/// Demo model on a coarser grid, for the commands that only need structure.
fn coarse(extra: Value) -> Value {
    let mut c = json!({
        "schema_version": 1,
        "model": {
            "rho": 0.9, "gamma": 1.0, "horizon": 10, "m0": 0.5,
            "cost": {"form": "product",
                     "r1": {"kind": "affine", "intercept": 0.0, "slope": 1.0},
                     "r2": {"kind": "affine", "intercept": 0.5, "slope": 1.0}},
            "grid_n": 401, "xi_n": 401
        },
        "mu0": {"kind": "uniform"}
    });
    for (k, v) in extra.as_object().unwrap() {
        c[k] = v.clone();
    }
    c
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn demo_finite_run_writes_the_solution_files() {
    let dir = TempDir::new().unwrap();
    let o = mfg(&["finite", "--out", "demo"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("demo");
    for f in ["z_path.csv", "policy.csv", "residuals.csv", "config.resolved.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let z = csv(&out.join("z_path.csv"));
    assert_eq!(z.len(), 21);
    assert_eq!(z[0][1].parse::<f64>().unwrap(), 0.5);
    let residuals = csv(&out.join("residuals.csv"));
    let last: f64 = residuals.last().unwrap()[1].parse().unwrap();
    assert!(last <= 1e-6, "{last}");
    // the resolved configuration reproduces the run
    let resolved: Value = serde_json::from_str(&fs::read_to_string(out.join("config.resolved.json")).unwrap()).unwrap();
    assert_eq!(resolved["model"]["rho"], json!(0.9));
    assert_eq!(resolved["solver"]["max_iter"], json!(200));
}

#[test]
fn discount_above_one_is_rejected_by_name() {
    let dir = TempDir::new().unwrap();
    let mut c = coarse(json!({}));
    c["model"]["rho"] = json!(1.2);
    let cfg = write_config(dir.path(), "bad.json", &c);
    let o = mfg(&["finite", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("rho"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn decreasing_cost_table_is_rejected() {
    let dir = TempDir::new().unwrap();
    let mut c = coarse(json!({}));
    c["model"]["cost"]["r1"] = json!({"kind": "table", "x": [0.0, 0.5, 1.0], "y": [0.0, 0.6, 0.4]});
    let cfg = write_config(dir.path(), "bad.json", &c);
    let o = mfg(&["stationary", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn initial_law_must_match_m0() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({"mu0": {"kind": "atom_at_zero"}})));
    let o = mfg(&["finite", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("m0"), "{}", stderr(&o));
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({"seeed": 3})));
    let o = mfg(&["finite", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn no_coupling_converges_in_one_iteration() {
    let dir = TempDir::new().unwrap();
    let mut c = coarse(json!({}));
    c["model"]["cost"]["r2"] = json!({"kind": "constant", "value": 1.0});
    let cfg = write_config(dir.path(), "c.json", &c);
    let o = mfg(&["finite", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("after 1 iterations"), "{}", stdout(&o));
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({"solver": {"max_iter": 2, "tol": 1e-12}})));
    let o = mfg(&["finite", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(dir.path().join("o/z_path.csv").is_file());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({"monte_carlo": {"n_cycles": 5000, "path_horizon": 50000}})));
    let cfg = cfg.to_str().unwrap();
    for (out, threads) in [("a", "1"), ("b", "3")] {
        for cmd in ["finite", "oracle-compare", "theta-sweep"] {
            let o = mfg(&[cmd, "--config", cfg, "--out", out, "--threads", threads], dir.path());
            assert!(matches!(o.status.code(), Some(0 | 3)), "{cmd}: {}", stderr(&o));
        }
    }
    for f in ["z_path.csv", "policy.csv", "residuals.csv", "oracle_compare.csv", "theta_sweep.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn theta_sweep_is_monotone() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({})));
    let o = mfg(&["theta-sweep", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv(&dir.path().join("o/theta_sweep.csv"));
    assert_eq!(rows.len(), 19);
    let z: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(z.windows(2).all(|w| w[1] >= w[0] - 1e-6), "{z:?}");
}

#[test]
fn r_sweep_shows_the_three_regions() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({})));
    let o = mfg(&["r-sweep", "--config", cfg.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bounds = &csv(&dir.path().join("o/r_bounds.csv"))[0];
    let (r_low, r_high): (f64, f64) = (bounds[0].parse().unwrap(), bounds[1].parse().unwrap());
    assert!(0.0 < r_low && r_low < r_high);
    let rows = csv(&dir.path().join("o/r_sweep.csv"));
    let mut last_interior = f64::NEG_INFINITY;
    let mut seen = [false; 3];
    for r in &rows {
        let x: f64 = r[0].parse().unwrap();
        match r[1].as_str() {
            "always_a1" => {
                assert!(x <= r_low + 1e-9, "{r:?}");
                seen[0] = true;
            }
            "interior" => {
                assert!(x >= r_low - 1e-9 && x <= r_high + 1e-9, "{r:?}");
                let theta: f64 = r[2].parse().unwrap();
                assert!(theta > last_interior, "{r:?}");
                last_interior = theta;
                seen[1] = true;
            }
            _ => {
                assert!(x >= r_high - 1e-9, "{r:?}");
                seen[2] = true;
            }
        }
    }
    assert_eq!(seen, [true; 3]);
}

#[test]
fn oracle_compare_default_agrees() {
    let dir = TempDir::new().unwrap();
    let o = mfg(&["oracle-compare", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let rows = csv(&dir.path().join("o/oracle_compare.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r[7] == "true"));
}

#[test]
fn stationary_and_ergodicity_write_their_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({})));
    let cfg = cfg.to_str().unwrap();
    let o = mfg(&["stationary", "--config", cfg, "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let st = &csv(&dir.path().join("o/stationary.csv"))[0];
    assert_eq!(st[1], "interior");
    assert_eq!(st[5], "1");
    let o = mfg(&["ergodicity", "--config", cfg, "--out", "o", "--thetas", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fits = csv(&dir.path().join("o/ergodicity_fit.csv"));
    assert_eq!(fits.len(), 3);
    for f in &fits {
        let r: f64 = f[3].parse().unwrap();
        assert!(r < 1.0 && !f[5].is_empty(), "{f:?}");
    }
}

#[test]
fn nplayer_writes_gaps_and_summary() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &coarse(json!({"monte_carlo": {"replications": 10}})));
    let o = mfg(&["nplayer", "--config", cfg.to_str().unwrap(), "--out", "o", "--n-list", "1,20"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(csv(&dir.path().join("o/nplayer_gaps.csv")).len(), 20);
    let summary = csv(&dir.path().join("o/nplayer_summary.csv"));
    assert_eq!(summary.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["1", "20"]);
}
