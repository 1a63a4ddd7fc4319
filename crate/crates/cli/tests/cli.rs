use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use solibound::kp::kp_pole_location;
use solibound::C64;

fn solibound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solibound"))
        .args(args)
        .output()
        .expect("spawn solibound")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn kp_seed_csv() {
    let o = solibound(&[
        "eval",
        "--model",
        "kp",
        "--solution",
        "seed",
        "--grid",
        "x:-1:1:3",
        "--grid",
        "Y:-1:1:3",
        "--grid",
        "T:0.5:1.5:3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,Y,T,u_re,u_im,w_re,w_im"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 27);
    assert!(rows.iter().all(|r| r.split(',').count() == 7));
}

#[test]
fn kp_dressed_json() {
    let o = solibound(&[
        "eval", "--format", "json", "--grid", "x:0:1:2", "--grid", "Y:0:0:1", "--grid", "T:1:1:1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for key in ["x", "Y", "T", "u_re", "u_im", "w_re", "w_im", "tau_re", "tau_im"] {
        assert!(rows[0][key].is_number(), "{key}");
    }
}

#[test]
fn toda_lattice_index_is_integer() {
    let o = solibound(&[
        "eval",
        "--model",
        "toda",
        "--example",
        "ex3",
        "--grid",
        "X:-1:1:2",
        "--grid",
        "Y:0:0:1",
        "--grid",
        "n:-3:3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("X,Y,n,u_re,u_im\n"));
    let ns: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(ns.len(), 14);
    assert_eq!(&ns[..7], ["-3", "-2", "-1", "0", "1", "2", "3"]);
}

#[test]
fn kp_contour_lies_on_hyperbola() {
    let o = solibound(&["contour", "--grid", "x:-1:1:2", "--grid", "t:0.5:2:5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,t,Y,T,defect,residual_re,residual_im"));
    let mut n = 0;
    for l in lines {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[2] * f[3] - 1.0).abs() < 1e-14);
        assert!(f[5].hypot(f[6]) < 1e-9);
        n += 1;
    }
    assert_eq!(n, 10);
}

#[test]
fn toda_ex2_contour_is_unit_circle() {
    let o = solibound(&[
        "contour",
        "--model",
        "toda",
        "--example",
        "ex2",
        "--param",
        "c=1",
        "--param",
        "D=1",
        "--grid",
        "y:0.1:1.4:4",
        "--grid",
        "n:0:1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("y,n,X,Y,defect,residual_re,residual_im\n"));
    for l in text.lines().skip(1) {
        let f: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((f[2].hypot(f[3]) - 1.0).abs() < 1e-14);
        assert!(f[5].hypot(f[6]) < 1e-8);
    }
}

#[test]
fn kp_pole_exits_one_with_sidecar() {
    let (x, t) = kp_pole_location(C64::new(0.5, 0.5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pole.csv");
    let o = solibound(&[
        "eval",
        "--param",
        "y0=0",
        "--param",
        "p=0.5+0.5i",
        "--grid",
        &format!("x:{x}:{x}:1"),
        "--grid",
        "Y:0:0:1",
        "--grid",
        &format!("T:{t}:{t}:1"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("NaN"));
    let poles = read_json(&dir.path().join("pole.csv.poles.json"));
    assert_eq!(poles["poles"].as_array().unwrap().len(), 1);
    assert_eq!(poles["config"]["command"], "eval");
}

#[test]
fn ex3_outside_regular_range_reports_poles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex3.json");
    let o = solibound(&[
        "eval",
        "--model",
        "toda",
        "--example",
        "ex3",
        "--param",
        "p=1",
        "--param",
        "D=0.5",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let rows = read_json(&out);
    assert!(rows.as_array().unwrap().iter().any(|r| r["u_re"].is_null()));
    assert!(!read_json(&dir.path().join("ex3.json.poles.json"))["poles"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn configuration_errors_exit_two() {
    for args in [
        &["verify", "--suite", "nope"][..],
        &["eval", "--param", "q=1"],
        &["eval", "--param", "alpha=abc"],
        &["eval", "--grid", "x:0:1"],
        &["eval", "--model", "toda", "--example", "ex9"],
        &["eval", "--model", "toda", "--example", "ex3", "--param", "c=1"],
        &["eval", "--model", "toda", "--param", "x0=1", "--param", "D=2"],
        &["eval", "--model", "toda", "--grid", "n:0.5:2"],
        &["verify", "--h", "-1"],
    ] {
        let o = solibound(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{args:?}");
    }
}

#[test]
fn invalid_thread_count_exits_two() {
    let o = Command::new(env!("CARGO_BIN_EXE_solibound"))
        .args(["verify", "--suite", "kp-reduction"])
        .env("SOLIBOUND_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_report_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    let o = solibound(&["verify", "--suite", "kp-glm", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_solibound"))
        .args(["verify", "--suite", "kp-glm", "--out", b.to_str().unwrap()])
        .env("SOLIBOUND_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let (ra, mut rb) = (read_json(&a), read_json(&b));
    rb["config"]["out"] = ra["config"]["out"].clone();
    assert_eq!(ra, rb);
    assert_eq!(ra["all_pass"], true);
    assert_eq!(ra["suite"], "kp-glm");
    let checks = ra["checks"].as_array().unwrap();
    assert_eq!(checks.len(), ra["passed"].as_u64().unwrap() as usize);
    for k in ["name", "value", "threshold", "pass"] {
        assert!(checks[0].get(k).is_some(), "{k}");
    }

    let o = solibound(&["verify", "--config", a.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut rc = read_json(&c);
    rc["config"]["out"] = ra["config"]["out"].clone();
    assert_eq!(ra, rc);
}

#[test]
fn verify_csv_lists_checks() {
    let o = solibound(&["verify", "--suite", "kp-reduction", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,tag,value,threshold,order,pass"));
    assert_eq!(lines.filter(|l| l.ends_with(",true")).count(), 2);
}
