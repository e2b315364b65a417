use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn trimer(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trimer"));
    cmd.current_dir(dir).args(args).args(["--out", "out"]);
    if let Some(text) = config {
        fs::write(dir.join("run.json"), text).unwrap();
        cmd.args(["--config", "run.json"]);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let k = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn simulate_writes_headers_and_plot() {
    let dir = scratch("simulate");
    let out = trimer(&dir, &["simulate", "--svg"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "simulate.csv");
    assert!(csv.starts_with("clock,time,R,y,s,w,energy_residual\n"));
    assert!(column(&csv, "energy_residual").iter().all(|r| *r < 1e-8));
    assert!(read(&dir, "simulate.svg").starts_with("<svg"));
    let doc = json(&dir, "simulate.json");
    assert!(doc["terminal_event"].is_string());
}

#[test]
fn simulate_on_positive_energy_chart() {
    let dir = scratch("simulate_hpos");
    let cfg =
        r#"{"params": {"masses": [1, 1, 1], "alpha": [1, 1, 1], "beta": [1, 1, 1], "exp_a": 6, "exp_b": 12, "h": 1}}"#;
    let out = trimer(&dir, &["simulate"], Some(cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "simulate.csv");
    assert!(csv.starts_with("clock,time,Rt,vt,st,ut,energy_residual\n"));
    // forcing the zero-energy chart at h = 1 is a configuration error
    let out = trimer(&dir, &["simulate", "--chart", "h0"], Some(cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn equilibria_report_saddles() {
    let dir = scratch("equilibria");
    let out = trimer(&dir, &["equilibria"], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir, "equilibria.csv");
    assert!(csv.starts_with("point,y,s,w,eig1_re,eig1_im,"));
    assert_eq!(csv.lines().count(), 3);
    assert_eq!(column(&csv, "stable_dim"), vec![1.0, 2.0]);
    assert_eq!(column(&csv, "unstable_dim"), vec![2.0, 1.0]);
    let y = column(&csv, "y");
    assert!((y[0] + y[1]).abs() < 1e-12 && y[1] > 0.0);
}

#[test]
fn hetero_matches_closed_form() {
    let dir = scratch("hetero");
    let out = trimer(&dir, &["hetero"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dev = column(&read(&dir, "hetero.csv"), "deviation");
    assert!(dev.iter().all(|d| *d < 1e-6));
    assert!(
        json(&dir, "hetero.json")["summary"]["terminal_distance"]
            .as_f64()
            .unwrap()
            < 1e-4
    );
    // an unmeetable tolerance is reported with exit code 3
    let out = trimer(&dir, &["hetero"], Some(r#"{"hetero": {"sup_tol": 1e-12}}"#));
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = scratch("sweep");
    let cfg = r#"{"sweep": {"n": 40}}"#;
    assert_eq!(
        trimer(&dir, &["sweep", "--seed", "7"], Some(cfg)).status.code(),
        Some(0)
    );
    let first = (read(&dir, "sweep_records.csv"), read(&dir, "sweep_counts.csv"));
    assert_eq!(
        trimer(&dir, &["sweep", "--seed", "7"], Some(cfg)).status.code(),
        Some(0)
    );
    assert_eq!(first, (read(&dir, "sweep_records.csv"), read(&dir, "sweep_counts.csv")));
    assert!(first.1.starts_with("kind,count,fraction\n"));
    assert_eq!(column(&first.1, "count").iter().sum::<f64>(), 40.0);
    assert_eq!(json(&dir, "sweep.json")["seed"], 7);
    assert_eq!(
        trimer(&dir, &["sweep", "--seed", "8"], Some(cfg)).status.code(),
        Some(0)
    );
    assert_ne!(first.0, read(&dir, "sweep_records.csv"));
}

#[test]
fn infinity_chi_advances_with_slope_lambda() {
    let dir = scratch("infinity");
    let cfg = r#"{"params": {"masses": [1, 1, 1], "alpha": [1, 1, 1], "beta": [1, 1, 1], "exp_a": 6, "exp_b": 12, "h": 0.5}}"#;
    let out = trimer(&dir, &["infinity", "--svg"], Some(cfg));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "infinity.csv");
    assert!(csv.starts_with("orbit,clock,time,vt,st,ut,chi,energy_residual\n"));
    let doc = json(&dir, "infinity.json");
    let lambda = doc["lambda"].as_f64().unwrap();
    let (orbit, st, chi) = (column(&csv, "orbit"), column(&csv, "st"), column(&csv, "chi"));
    let mut start = 0;
    for k in 1..=orbit.len() {
        if k == orbit.len() || orbit[k] != orbit[start] {
            for j in start..k {
                assert!((chi[j] - chi[start] - lambda * (st[j] - st[start])).abs() < 1e-8);
            }
            start = k;
        }
    }
    assert!(doc["max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn infinity_on_zero_energy_chart_stays_on_manifold() {
    let dir = scratch("infinity_h0");
    let out = trimer(&dir, &["infinity"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir, "infinity.csv");
    assert!(column(&csv, "energy_residual").iter().all(|r| *r < 1e-9));
    let doc = json(&dir, "infinity.json");
    for orbit in doc["orbits"].as_array().unwrap() {
        assert_eq!(orbit["terminal_event"], "edge");
    }
}

#[test]
fn default_periodic_orbit_seed_is_rejected() {
    let dir = scratch("po");
    let out = trimer(&dir, &["po-search"], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("|w| <="));
}

#[test]
fn invalid_configurations_exit_with_two() {
    let dir = scratch("invalid");
    for cfg in [
        r#"{"sweeps": {}}"#,
        r#"{"sweep": {"n": 0}}"#,
        r#"{"params": {"masses": [1, 1, 1], "alpha": [1, 1, 1], "beta": [1, 1, 1], "exp_a": 6, "exp_b": 5, "h": 0}}"#,
        r#"{"params": {"masses": [1, 1, 1], "alpha": [1, 1, 1], "beta": [1, 1, 1], "exp_a": 6, "exp_b": 12, "h": -1}}"#,
        r#"{"simulate": {"initial": [0, 0.5]}}"#,
        "not json",
    ] {
        let out = trimer(&dir, &["simulate"], Some(cfg));
        assert_eq!(
            out.status.code(),
            Some(2),
            "{cfg}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
    let out = Command::new(env!("CARGO_BIN_EXE_trimer"))
        .args(["simulate", "--config", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
