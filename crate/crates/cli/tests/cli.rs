use std::process::{Command, Output};

fn starstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starstar"))
        .args(args)
        .output()
        .expect("run the CLI")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn passing_run_exits_zero_with_summary_line() {
    let o = starstar(&["--command", "verify-reflection", "--draws", "10", "--tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.starts_with("PASS max_residual="), "{line}");
    let value = line.trim().split('=').nth(1).unwrap();
    assert!(value.parse::<f64>().unwrap() < 1e-12);
}

#[test]
fn failing_run_exits_nonzero() {
    let o = starstar(&["--command", "verify-star-star", "--draws", "2", "--grid", "16", "--tol", "1e-14"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL max_residual="));
}

#[test]
fn bad_configuration_exits_two() {
    let o = starstar(&["--command", "verify-rains", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = starstar(&["--command", "verify-nothing"]);
    assert_eq!(o.status.code(), Some(2));
    let o = starstar(&["--command", "verify-rains", "--grid", "64", "--max-grid", "32"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn point_evaluation_and_csv_output() {
    let dir = std::env::temp_dir().join(format!("starstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("gamma.csv");
    let o = starstar(&[
        "--command", "eval-gamma", "--p", "0.3", "--q", "0.4", "--z", "0.5,-0.2",
        "--format", "csv", "--out", out.to_str().unwrap(), "--tol", "1e-12",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    let header: Vec<&str> = lines[0].split(',').collect();
    let row: Vec<&str> = lines[1].split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("z_re").parse::<f64>().unwrap(), 0.5);
    assert_eq!(col("z_im").parse::<f64>().unwrap(), -0.2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn adaptive_refinement_records_the_grid_used() {
    let dir = std::env::temp_dir().join(format!("starstar-cli-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("r.json");
    let o = starstar(&[
        "--command", "verify-rains", "--draws", "3", "--grid", "16", "--max-grid", "256",
        "--tol", "1e-10", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for d in json["draws"].as_array().unwrap() {
        let grid = d["grid"].as_u64().unwrap();
        assert!((32..=256).contains(&grid));
        assert!(d["est_rel_err"].as_str().unwrap().parse::<f64>().unwrap() < 1e-10);
    }
    std::fs::remove_dir_all(&dir).ok();
}
