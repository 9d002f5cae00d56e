use std::process::{Command, Output};

fn ftgadget(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftgadget"))
        .args(args)
        .env("FTGADGET_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn verify_passes() {
    let out = ftgadget(&["verify", "--L", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 3);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn simulate_grid_rows() {
    let out = ftgadget(&[
        "simulate", "--L", "6,12", "--m", "3", "--mode", "offset", "--p", "0.008,0.011,0.014", "--p1", "0",
        "--trials", "20", "--decoder", "union_find", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "schema_version,mode,L,m,p,p1,decoder,trials,x_fail,z_fail,rate,ci_lo,ci_hi,seed");
    assert_eq!(lines.len(), 7);
    assert!(lines[1..].iter().all(|l| l.starts_with("1,offset,") && l.ends_with(",3")));
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "L = [4]\npartition = { m = 2, mode = \"aligned\" }\np = [0.0, 0.001]\nrounds = 6\ntrials = 5\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = ftgadget(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "7",
        "--seed",
        "1",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.starts_with("1,aligned,4,2,") && l.contains(",mwpm,7,")));
}

#[test]
fn config_errors_exit_one() {
    for args in [
        &["simulate", "--L", "6", "--mode", "offset", "--m", "3", "--p", "0.01"][..],
        &["simulate", "--L", "6", "--mode", "offset", "--m", "2", "--p", "0.01", "--seed", "1"][..],
        &["simulate", "--L", "6", "--mode", "spiral", "--p", "0.01", "--seed", "1"][..],
        &["simulate", "--L", "4", "--mode", "bare", "--p", "2", "--seed", "1"][..],
        &["threshold", "--preset", "table9-x", "--seed", "1"][..],
        &["build-gadget", "--L", "6", "--mode", "offset", "--m", "4"][..],
        &["frobnicate"][..],
    ] {
        let out = ftgadget(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn bad_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "L = [4]\nmode = \"bare\"\np = [0.01]\nthreads = 3\n").unwrap();
    let out = ftgadget(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("threads"));
}

#[test]
fn build_gadget_json() {
    let out = ftgadget(&["build-gadget", "--L", "6", "--mode", "offset", "--m", "3", "--round", "2", "--kind", "x"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "x");
    assert_eq!(v["ancilla"].as_array().unwrap().len(), 4 * 24);
    assert_eq!(v["gamma"].as_object().unwrap().len(), 4 * 24);
    assert_eq!(v["h_tilde"].as_object().unwrap().len(), 36);
}

#[test]
fn presets_are_listed() {
    let out = ftgadget(&["threshold", "--list-presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["table2-m3-offset", "table2-bare", "table1-steane"] {
        assert!(text.lines().any(|l| l == name));
    }
}
