use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapcert")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn gap_rows() {
    let o = run(&["gap", "--weight", "gaussian", "--n", "1", "--j", "0,inf"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("n,J,gap,log_gap"));
    let row: Vec<&str> = lines.next().unwrap().rsplitn(3, ',').collect();
    let gap: f64 = row[1].parse().unwrap();
    assert!((gap - 0.5).abs() < 1e-14);

    let o = run(&["gap", "--weight", "gaussian", "--n", "2", "--n-max", "4", "--format", "json"]);
    let rows: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| (r["gap"].as_f64().unwrap() - 1.0).abs() < 1e-13));
}

#[test]
fn gap_matches_oracle() {
    let common = ["--weight", "gaussian", "--n", "3", "--j", "-1,inf", "--format", "json"];
    let gap = run(&[&["gap"][..], &common[..]].concat());
    let oracle = run(&[&["oracle"][..], &common[..]].concat());
    assert_eq!(oracle.status.code(), Some(0), "{}", stderr(&oracle));
    let g: serde_json::Value = serde_json::from_str(stdout(&gap).trim()).unwrap();
    let r: serde_json::Value = serde_json::from_str(stdout(&oracle).trim()).unwrap();
    let (a, b) = (g["gap"].as_f64().unwrap(), r["value"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    assert_eq!(r["method"], "NestedQuadrature");
}

#[test]
fn oracle_monte_carlo_is_reproducible() {
    let args = [
        "oracle",
        "--method",
        "mc",
        "--weight",
        "gaussian",
        "--n",
        "4",
        "--j",
        "-inf,2",
        "--samples",
        "20000",
        "--seed",
        "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_exit_codes() {
    let o = run(&["verify", "--weight", "gaussian", "--j", "-inf,1", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(reports.iter().any(|r| r["identity_id"] == "tau_u"));
    assert!(reports.iter().all(|r| r["pass"] == true));

    let o = run(&["verify", "--weight", "gaussian", "--j", "-inf,1", "--n", "4", "--corrupt-b", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));

    let o = run(&["verify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, "{}").unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_standard_matrix_passes() {
    let o = run(&["verify", "--standard", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().count() > 2000);
}

#[test]
fn verify_dump_writes_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dump.json");
    let o = run(&[
        "verify",
        "--weight",
        "laguerre",
        "--alpha",
        "1",
        "--j",
        "0.5,inf",
        "--n",
        "3",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&dump).unwrap();
    assert!(text.contains("G_J") || text.contains("g_j"), "{text}");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"weight": {"kind": "gaussian"}, "J": [["-inf", 0.0]], "n": [1, 2], "format": "json"}"#)
        .unwrap();
    let o = run(&["gap", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
    let o = run(&["gap", "--config", cfg.to_str().unwrap(), "--n", "1"]);
    let r: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((r["gap"].as_f64().unwrap() - 0.5).abs() < 1e-14);

    std::fs::write(&cfg, r#"{"weight": {"kind": "gaussian"}, "bogus": 1}"#).unwrap();
    assert_eq!(run(&["gap", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn pde_summary_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let args = [
        "pde",
        "--weight",
        "gaussian",
        "--n",
        "3",
        "--j",
        "-inf,0.5",
        "--xi",
        "0.5:0.52:0.01",
        "--t",
        "0:0.01:0.01",
        "--summary",
        summary.to_str().unwrap(),
    ];
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("n,xi,t,residual_id,residual,h_xi,h_t\n"));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let text = s.to_string();
    assert!(text.contains("\"pde_t\""), "{text}");

    // Reruns are byte-identical.
    let again = run(&args);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn pde_without_t_axis_is_a_configuration_error() {
    let o = run(&["pde", "--weight", "gaussian", "--n", "3", "--j", "-inf,0.5", "--xi", "0.5:0.52:0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t axis"), "{}", stderr(&o));
}

#[test]
fn painleve_five_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let o = run(&[
        "painleve",
        "--weight",
        "laguerre",
        "--alpha",
        "0",
        "--n",
        "2",
        "--j",
        "0,0.5",
        "--xi",
        "0.5:2:0.005",
        "--richardson",
        "2",
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let ids = &s[0]["identities"];
    let main = ids.as_array().unwrap().iter().find(|r| r["id"] == "painleve5_sigma").unwrap();
    assert!(main["max_residual"].as_f64().unwrap() < 1e-6);
    assert!(stdout(&o).starts_with("n,xi,residual_id,residual,h\n"));

    let o = run(&[
        "painleve",
        "--weight",
        "custom",
        "--coeffs",
        "0,0,0,0,1",
        "--n",
        "2",
        "--j",
        "-inf,0",
        "--xi",
        "0:1:0.1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_arguments() {
    assert_eq!(run(&["gap", "--frobnicate"]).status.code(), Some(2));
    let help = stdout(&run(&["pde", "--help"]));
    for flag in ["--config", "--weight", "--j", "--xi", "--t", "--richardson", "--summary", "--out"] {
        assert!(help.contains(flag), "missing {flag}");
    }
}
