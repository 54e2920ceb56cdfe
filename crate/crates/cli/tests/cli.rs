use std::process::{Command, Output};

fn carnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot")).args(args).env_remove("CARNOT_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn assert_input_error(o: &Output) {
    assert_eq!(o.status.code(), Some(1), "stderr: {}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[input]: "), "{err}");
}

#[test]
fn check_builtin() {
    let o = carnot(&["check", "--group", "heisenberg"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], true);
    assert_eq!(v["homogeneous_dimension"], 4);
    assert_eq!(v["config"]["group"], "heisenberg");
}

#[test]
fn group_arithmetic() {
    let o = carnot(&["bch", "--group", "heisenberg", "--x", "X", "--y", "Y"]);
    assert_eq!(stdout(&o), "[1.0,1.0,0.5]\n");
    let o = carnot(&["dilate", "--group", "heisenberg", "--t", "2", "--x", "1,1,1"]);
    assert_eq!(stdout(&o), "[2.0,2.0,4.0]\n");
    let o = carnot(&["inverse", "--group", "engel", "--x", "X1-2X4"]);
    assert_eq!(stdout(&o), "[-1.0,-0.0,-0.0,2.0]\n");
}

#[test]
fn input_errors() {
    assert_input_error(&carnot(&["check", "--group", "nope"]));
    assert_input_error(&carnot(&["check"]));
    assert_input_error(&carnot(&["distance", "--group", "heisenberg", "--y", "X"]));
    assert_input_error(&carnot(&["dimension", "--group", "heisenberg", "--radii", "1:2", "--seed", "1"]));
    assert_input_error(&carnot(&["bch", "--group", "heisenberg", "--x", "W", "--y", "X"]));
    assert_input_error(&carnot(&["frobnicate"]));
    assert_input_error(&carnot(&["derivate", "--group", "heisenberg", "--v", "Z", "--seed", "1"]));
}

#[test]
fn group_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("h.toml");
    std::fs::write(&good, "version = 1\nname = \"h\"\nlayer_dims = [2, 1]\nlabels = [\"A\", \"B\", \"C\"]\n[[brackets]]\ni = 0\nj = 1\ncoeffs = { \"C\" = 2.0 }\n").unwrap();
    let o = carnot(&["bch", "--group-file", good.to_str().unwrap(), "--x", "A", "--y", "B"]);
    assert_eq!(stdout(&o), "[1.0,1.0,1.0]\n");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "version = 1\nname = \"h\"\nlayer_dims = [1, 2]\n[[brackets]]\ni = 0\nj = 1\ncoeffs = { \"2\" = 1.0 }\n").unwrap();
    assert_input_error(&carnot(&["check", "--group-file", bad.to_str().unwrap()]));
    std::fs::write(&bad, "this is not toml [").unwrap();
    assert_input_error(&carnot(&["check", "--group-file", bad.to_str().unwrap()]));
    assert_input_error(&carnot(&["check", "--group-file", "/nonexistent/file.toml"]));
}

#[test]
fn out_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let o = carnot(&["spread", "--group", "heisenberg", "--v", "X", "--samples", "8", "--seed", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("spread.csv")).unwrap();
    assert!(csv.starts_with("epsilon,t,sup,sup_over_t,samples\n"));
    assert!(csv.contains("# config: "));
    assert!(out.join("spread.json").exists());
}

#[test]
fn thread_env_only_without_flag() {
    let run = |env: &str, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_carnot"));
        c.args(["check", "--group", "engel"]).env("CARNOT_THREADS", env);
        if let Some(f) = flag {
            c.args(["--threads", f]);
        }
        c.output().unwrap()
    };
    assert_input_error(&run("many", None));
    assert!(run("many", Some("2")).status.success());
    assert!(run("2", None).status.success());
}

/// Each stochastic subcommand, twice with the same seed and different
/// thread counts: outputs must match byte for byte.
#[test]
fn deterministic_reports() {
    let cases: &[&[&str]] = &[
        &["distance", "--group", "engel", "--y", "0.3,-0.2,0.4,0.1", "--seed", "5"],
        &["ball-volume", "--group", "heisenberg", "--radius", "1", "--samples", "4000", "--calibration-samples", "200", "--seed", "5"],
        &["dimension", "--group", "heisenberg", "--radii", "0.5:2:3", "--samples", "3000", "--calibration-samples", "200", "--seed", "5"],
        &["density", "--group", "heisenberg", "--v", "X", "--samples", "3000", "--calibration-samples", "200", "--seed", "5"],
        &["derivate", "--group", "heisenberg", "--v", "X+Y", "--samples", "6", "--calibration-samples", "200", "--tau", "-1,2", "--seed", "5"],
        &["spread", "--group", "heisenberg", "--v", "Y", "--samples", "8", "--seed", "5"],
        &["divergence", "--group", "heisenberg", "--v", "X", "--w", "Y", "--tmax", "8", "--seed", "5"],
        &["obstruction", "--group", "heisenberg", "--v", "X", "--w", "Y", "--tmax", "8", "--seed", "5"],
    ];
    for args in cases {
        let a = carnot(&[args, &["--threads", "1"][..]].concat());
        let b = carnot(&[args, &["--threads", "3"][..]].concat());
        assert!(a.status.success(), "{args:?}: {}", stderr(&a));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn documented_examples() {
    let o = carnot(&["obstruction", "--group", "heisenberg", "--v", "X", "--w", "Y", "--tmax", "32", "--seed", "7"]);
    let text = stdout(&o);
    let json_start = text.find("\n{\n").unwrap() + 1;
    let v: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(v["verdict"], "obstruction witnessed");
    let o = carnot(&["obstruction", "--group", "abelian2", "--v", "e1", "--w", "e2", "--tmax", "32", "--seed", "7"]);
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text[text.find("\n{\n").unwrap() + 1..]).unwrap();
    assert_eq!(v["verdict"], "inconclusive");
}
