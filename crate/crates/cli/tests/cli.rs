use std::process::{Command, Output};

fn helmcsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helmcsg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn table_runs() {
    let o = helmcsg(&["table-criticalk"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("n=16 k1=32 k2=45.3"));
    assert!(s.contains("17.9327"));
}

#[test]
fn sweep_writes_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = helmcsg(&[
        "sweep",
        "--n",
        "16",
        "--k-range",
        "4:8:2",
        "--dims",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = std::fs::read_to_string(dir.path().join("sweep.k.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    assert!(rows.starts_with("k,iterations,converged"));
    let side: String = std::fs::read_to_string(dir.path().join("sweep.json")).unwrap();
    assert!(side.contains("\"k-sweep-2d\""));
}

#[test]
fn identical_runs_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = helmcsg(&[
            "precond-spectrum",
            "--n",
            "16",
            "--k",
            "6.4",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    for part in ["k", "eigs"] {
        let a = std::fs::read(dir.path().join(format!("a.{part}.csv"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("b.{part}.csv"))).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn json_config_with_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 16, "sweep": [3.0], "precond": "csg-mg"}"#).unwrap();
    let o = helmcsg(&["solve", "--config", cfg.to_str().unwrap(), "--k", "5"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).starts_with("k=5 "));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        vec!["sweep", "--tol", "1.5", "--k", "1"],
        vec!["sweep"],
        vec!["solve", "--k", "1", "--k-range", "1:2:1"],
        vec!["solve", "--k", "1", "--precond", "ilu"],
        vec!["solve", "--k", "1", "--dims", "3"],
        vec!["spectrum", "--R", "0.5"],
        vec!["spectrum", "--config", "/nonexistent/config.json"],
        vec!["sweep", "--k-range", "5:1:1"],
        vec!["no-such-command"],
    ] {
        let o = helmcsg(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn non_convergence_exits_3() {
    let o = helmcsg(&[
        "solve",
        "--n",
        "32",
        "--k",
        "20",
        "--precond",
        "none",
        "--max-iter",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(3));
}
