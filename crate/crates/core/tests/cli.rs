use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use trident_nilpotent::trident::{fields_original, fields_transformed};
use trident_nilpotent::vfield::VectorField;

fn trident(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trident"))
        .args(args)
        .env("TRIDENT_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn model_prints_transformed_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(&["model", "--which", "transformed"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let printed = [
        "d/dx1 + sin(x4 - 2*pi/3)*d/dx4 + sin(x5)*d/dx5 + sin(x6 + 2*pi/3)*d/dx6",
        "d/dx2 - cos(x4 - 2*pi/3)*d/dx4 - cos(x5)*d/dx5 - cos(x6 + 2*pi/3)*d/dx6",
        "d/dx3 - (1 + cos(x4))*d/dx4 - (1 + cos(x5))*d/dx5 - (1 + cos(x6))*d/dx6",
    ];
    assert_eq!(lines, printed);
    for (line, f) in lines.iter().zip(fields_transformed().iter()) {
        assert_eq!(&VectorField::parse(line).unwrap(), f);
    }
}

#[test]
fn model_prints_original_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(&["model", "--which", "original"], dir.path());
    assert!(o.status.success());
    let fields: Vec<VectorField> = stdout(&o).lines().map(|l| VectorField::parse(l).unwrap()).collect();
    assert_eq!(fields, fields_original().to_vec());
}

#[test]
fn dsl_parse_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    fs::write(&file, "d/dx1\n# comment\nd/dx2 + sin(x1*x3)*d/dx4\n").unwrap();
    let o = trident(&["model", "--dsl", file.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bad.txt:3:13"), "{}", stderr(&o));
}

#[test]
fn dsl_model_round_trips_through_model() {
    let dir = tempfile::tempdir().unwrap();
    let first = trident(&["model", "--which", "original"], dir.path());
    let file = dir.path().join("fields.txt");
    fs::write(&file, stdout(&first)).unwrap();
    let second = trident(&["model", "--dsl", file.to_str().unwrap()], dir.path());
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn analyze_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(&["analyze", "--strict"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["growth_vector"], serde_json::json!([3, 6]));
    assert_eq!(v["weights"], serde_json::json!([1, 1, 1, 2, 2, 2]));
    assert_eq!(v["hat_fields_y"][2], "d/dy3");
    assert_eq!(v["pass"], true);
    assert!(v["transform_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn analyze_reports_non_regular_point() {
    let dir = tempfile::tempdir().unwrap();
    let pi = std::f64::consts::PI.to_string();
    let point = format!("0,0,0,{pi},{pi},{pi}");
    let o = trident(&["analyze", "--point", &point], dir.path());
    assert!(!o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["error"], "non-regular-point");
    assert!(v["achieved_rank"].as_u64().unwrap() < 6);
}

#[test]
fn compare_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(&["compare", "--strict"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["compare_12.csv", "compare_12.svg", "compare_12.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("compare_12.json")).unwrap()).unwrap();
    for key in ["max_dev", "endpoint_dev", "max_slip", "direction_cosine", "magnitude"] {
        assert!(report[key].is_f64(), "{key}");
    }
    assert_eq!(report["wheel_dev"].as_array().unwrap().len(), 3);
    assert!(report["max_slip"].as_f64().unwrap() > 0.0);
    let svg = fs::read_to_string(dir.path().join("compare_12.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray"));
}

#[test]
fn zero_amplitude_gives_flat_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(
        &["compare", "--amplitude", "0", "--input", "23", "--emit", "csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["max_dev", "endpoint_dev", "max_slip", "magnitude"] {
        assert_eq!(v[key], 0.0, "{key}");
    }
    let csv = fs::read_to_string(dir.path().join("compare_23.csv")).unwrap();
    let zero = "0.0000000000000000e0";
    assert!(csv.lines().skip(1).all(|l| l.split(',').skip(1).all(|c| c == zero)));
    assert!(!dir.path().join("compare_23.svg").exists());
}

#[test]
fn simulate_writes_trajectory_and_kinematics() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(
        &["simulate", "--input", "13", "--steps", "200", "--periods", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let traj = fs::read_to_string(dir.path().join("trajectory_13.csv")).unwrap();
    assert!(traj.starts_with("t,x1,x2,x3,x4,x5,x6\n"));
    assert_eq!(traj.lines().count(), 402);
    let kin = fs::read_to_string(dir.path().join("kinematics_13.csv")).unwrap();
    assert_eq!(kin.lines().next().unwrap().split(',').count(), 15);
    assert!(dir.path().join("trajectory_13.svg").is_file());

    let o = trident(&["simulate", "--nilpotent", "--steps", "100"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"], "nilpotent-x");
    assert!(dir.path().join("trajectory_12_nilpotent.csv").is_file());
}

#[test]
fn sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = trident(&["sweep", "--strict", "--steps", "1000"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn strict_fails_on_failed_verification() {
    // at large amplitudes the displacement direction drifts away from the bracket
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--amplitudes", "2,1.5", "--steps", "500", "--emit", "csv"];
    let lenient = trident(&args, dir.path());
    assert!(lenient.status.success());
    assert!(stderr(&lenient).contains("warning: verification failed"));
    let strict = trident(&[&args[..], &["--strict"]].concat(), dir.path());
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"model": "original", "input": "13", "amplitude": 0.05, "steps": 400, "emit": "csv"}"#,
    )
    .unwrap();
    let o = trident(
        &["--config", config.to_str().unwrap(), "compare", "--input", "23"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"], "original");
    assert_eq!(v["kind"], "23");
    assert_eq!(v["amplitude"], 0.05);
    assert_eq!(v["steps"], 400);

    fs::write(&config, r#"{"steps": 0}"#).unwrap();
    let o = trident(&["--config", config.to_str().unwrap(), "compare"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn identical_runs_produce_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert!(trident(&["compare", "--input", "13", "--steps", "500"], dir)
            .status
            .success());
        assert!(trident(&["simulate", "--steps", "300"], dir).status.success());
    }
    for name in [
        "compare_13.csv",
        "compare_13.json",
        "compare_13.svg",
        "trajectory_12.csv",
        "kinematics_12.csv",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}
