use std::path::Path;
use std::process::Command as Proc;

use itep_cli::{cmd_density, cmd_eig, cmd_field, cmd_fit, cmd_tunnel, RunConfig, Status};
use serde_json::{json, Value};

fn cfg(v: Value) -> RunConfig {
    RunConfig::from_json(&v.to_string()).unwrap()
}

fn ball(n0: f64, rect: [f64; 4]) -> Value {
    json!({
        "medium": {"kind": "uniform_ball", "radius": 1.0, "n0": n0},
        "directions": [[0.0, 0.0, 1.0]],
        "l_range": [0, 0],
        "rectangle": rect,
    })
}

fn col(t: &itep_cli::Table, name: &str) -> Vec<f64> {
    let i = t.header.iter().position(|h| h == name).unwrap();
    t.rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn itep(args: &[&str], config: &Path, out: &Path) -> i32 {
    let st = Proc::new(env!("CARGO_BIN_EXE_itep"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out-dir")
        .arg(out)
        .env("RUST_LOG", "warn")
        .status()
        .unwrap();
    st.code().unwrap()
}

#[test]
fn constant_ball_table_has_the_triple_zeros() {
    let rep = cmd_eig(&cfg(ball(4.0, [0.5, 10.0, -2.0, 2.0]))).unwrap();
    let t = rep.table("eigenvalues.csv").unwrap();
    assert_eq!(t.rows.len(), 3);
    let re = col(t, "re_k");
    let im = col(t, "im_k");
    for (m, (x, y)) in re.iter().zip(&im).enumerate() {
        assert!((x - std::f64::consts::PI * (m + 1) as f64).abs() < 1e-8 && y.abs() < 1e-8);
    }
    assert!(t.rows.iter().all(|r| r[3] == "3" && r[5] == "propagates"));
}

#[test]
fn free_medium_gives_empty_table_and_warning() {
    let rep = cmd_eig(&cfg(ball(1.0, [0.5, 10.0, -2.0, 2.0]))).unwrap();
    assert!(rep.table("eigenvalues.csv").unwrap().rows.is_empty());
    assert!(rep.warnings.iter().any(|w| w.contains("degenerate")));
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ \"medium\": ").unwrap();
    let out = dir.path().join("out");
    assert_eq!(itep(&["eig"], &p, &out), 2);
    assert!(!out.exists());
}

#[test]
fn synthetic_density_and_short_radius_list() {
    let mut v = ball(4.0, [0.5, 10.0, -2.0, 2.0]);
    v["density"] = json!({"radii": [10.0, 20.0, 30.0, 40.0], "synthetic": {"frequency": 2.0}});
    let rep = cmd_density(&cfg(v.clone())).unwrap();
    let dev = col(rep.table("density.csv").unwrap(), "deviation");
    assert!(*dev.last().unwrap() < 0.02, "{dev:?}");

    v["density"] = json!({"radii": [10.0, 20.0]});
    assert!(RunConfig::from_json(&v.to_string()).is_err());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("short.json");
    std::fs::write(&p, v.to_string()).unwrap();
    assert_eq!(itep(&["density"], &p, &dir.path().join("out")), 2);
}

#[test]
fn tunnel_columns_follow_the_chain() {
    let rep = cmd_tunnel(&cfg(ball(4.0, [0.5, 7.0, -1.0, 1.0]))).unwrap();
    let t = rep.table("tunnel.csv").unwrap();
    assert_eq!(t.header.len(), 5, "{:?}", t.header);
    assert_eq!(t.rows.len(), 2);

    let mut v = ball(4.0, [0.5, 7.0, -1.0, 1.0]);
    v["medium"]["center"] = json!([2.0, 0.0, 0.0]);
    let rep = cmd_tunnel(&cfg(v)).unwrap();
    assert!(rep.table("tunnel.csv").unwrap().rows.is_empty());
    assert!(rep.notes.iter().any(|n| n.contains("no intersections")));
}

#[test]
fn fit_from_the_exact_value() {
    let mut v = ball(4.0, [0.5, 10.0, -2.0, 2.0]);
    v["fit"] = json!({"family": {"family": "constant_ball", "radius": 1.0}, "init": [4.0], "bounds": [[2.0, 6.0]]});
    let rep = cmd_fit(&cfg(v)).unwrap();
    assert_eq!(rep.status, Status::Ok);
    let p = rep.results["fit"]["parameters"][0].as_f64().unwrap();
    assert!((p - 4.0).abs() < 1e-6, "{p}");
}

#[test]
fn fit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("fit.json");
    let mut v = ball(4.0, [0.5, 10.0, -2.0, 2.0]);
    v["fit"] = json!({"family": {"family": "constant_ball", "radius": 1.0}, "init": [3.0], "bounds": [[6.0, 2.0]]});
    std::fs::write(&p, v.to_string()).unwrap();
    assert_eq!(itep(&["fit"], &p, &dir.path().join("a")), 2);
    v["fit"]["bounds"] = json!([[2.0, 6.0]]);
    v["fit"]["options"] = json!({"max_iterations": 1});
    std::fs::write(&p, v.to_string()).unwrap();
    let out = dir.path().join("b");
    assert_eq!(itep(&["fit"], &p, &out), 4);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["status"], "not_converged");
}

#[test]
fn free_field_pair_coincides() {
    let mut v = ball(1.0, [0.5, 10.0, -2.0, 2.0]);
    for l in 0..3 {
        v["field"] = json!({"k": [3.7, 0.4], "l": l, "coefficients": {"fixed": {"a": [1.0, 0.0], "b": [1.0, 0.0]}}});
        let rep = cmd_field(&cfg(v.clone())).unwrap();
        let mis = col(rep.table("field.csv").unwrap(), "mismatch");
        assert!(mis.iter().all(|m| *m < 1e-9), "l = {l}: {:e}", mis.iter().cloned().fold(0.0, f64::max));
    }
}

#[test]
fn field_matches_only_at_eigenvalues() {
    let v = ball(2.25, [0.5, 8.0, -1.0, 1.0]);
    let rep = cmd_eig(&cfg(v.clone())).unwrap();
    let t = rep.table("eigenvalues.csv").unwrap();
    let k = [col(t, "re_k")[0], col(t, "im_k")[0]];
    let mut w = v.clone();
    w["field"] = json!({"k": k});
    let rep = cmd_field(&cfg(w.clone())).unwrap();
    let m = rep.results["interfaces"][0]["mismatch"].as_f64().unwrap();
    assert!(m < 1e-6, "{m}");
    w["field"] = json!({"k": [k[0] + 0.3, 0.0]});
    let rep = cmd_field(&cfg(w)).unwrap();
    let m = rep.results["interfaces"][0]["mismatch"].as_f64().unwrap();
    assert!(m > 1e-3, "{m}");
}

#[test]
fn binary_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ball.json");
    std::fs::write(&p, ball(2.25, [0.5, 8.0, -1.0, 1.0]).to_string()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(itep(&["eig", "--seed", "7"], &p, &a), 0);
    assert_eq!(itep(&["eig", "--seed", "7"], &p, &b), 0);
    let ra = std::fs::read(a.join("eigenvalues.csv")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("eigenvalues.csv")).unwrap());
    assert!(!ra.contains(&b'\r'));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["config"]["tolerances"]["roots"]["seed"], 7);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
}
