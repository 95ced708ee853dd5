//! Acceptance criteria 1–10. Runs without the libtest harness so every
//! criterion prints its PASS/FAIL line; exits nonzero if any fails.

use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use trident_nilpotent::linalg::Matrix;
use trident_nilpotent::nilpotent::{dilate, NilpotentApproximation};
use trident_nilpotent::privcoord::{verify_privileged, PrivilegedCoordinates};
use trident_nilpotent::sim::{
    bracket_displacement, compare, integrate, max_slip, ControlInput, Experiment, InputKind, DEFAULT_STEPS,
};
use trident_nilpotent::symexpr::taylor;
use trident_nilpotent::trident::{fields_transformed, Configuration, Parametrization};
use trident_nilpotent::vfield::{fd_bracket, growth_vector, lie_bracket, weights, RANK_TOL};

const PARAM: Parametrization = Parametrization::Transformed;
const FD_H: f64 = 1e-5;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit,
        format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()),
    )
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn out_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn trident(args: &[&str], dir: &Path) -> Result<Value, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_trident"))
        .args(args)
        .env("TRIDENT_OUT_DIR", dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "{args:?} exited {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    serde_json::from_slice(&o.stdout).map_err(|e| e.to_string())
}

fn random_points(seed: u64, n: usize, radius: f64) -> Vec<[f64; 6]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-radius..=radius)))
        .collect()
}

fn c1_bracket12() -> Check {
    let start = Instant::now();
    let g = fields_transformed();
    let b = lie_bracket(&g[0], &g[1]).map_err(|e| e.to_string())?.eval(&[0.0; 6]);
    let fd = fd_bracket(&g[0], &g[1], &[0.0; 6], FD_H);
    let elapsed = start.elapsed();
    let exact = max_gap(&b, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let oracle = max_gap(&b, &fd);
    ensure(exact <= 1e-12, format!("[g1,g2](0) = {b:?}"))?;
    ensure(oracle <= 1e-6, format!("fd gap {oracle:.2e}"))?;
    within(elapsed, 1.0)?;
    Ok(format!("[g1,g2](0) = {b:?}, fd gap {oracle:.1e}"))
}

fn c2_bracket_ledger() -> Check {
    let g = fields_transformed();
    let s = 3f64.sqrt();
    let reference = [
        ("g5", (1, 2), [0.0, 0.0, 0.0, 0.0, s, -s]),
        ("g6", (0, 2), [0.0, 0.0, 0.0, 2.0, -1.0, -1.0]),
    ];
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (name, (i, j), printed) in reference {
        let b = lie_bracket(&g[i], &g[j]).map_err(|e| e.to_string())?.eval(&[0.0; 6]);
        let fd = fd_bracket(&g[i], &g[j], &[0.0; 6], FD_H);
        worst = worst.max(max_gap(&b, &fd));
        rows.push(json!({
            "name": name,
            "pair": [i + 1, j + 1],
            "computed": b,
            "finite_difference": fd,
            "reference": printed,
            "difference": max_gap(&b, &printed),
        }));
    }
    ensure(worst <= 1e-6, format!("fd gap {worst:.2e}"))?;
    let path = out_dir("c2").join("bracket_discrepancy.json");
    fs::write(&path, serde_json::to_string_pretty(&rows).unwrap()).map_err(|e| e.to_string())?;
    Ok(format!("fd gap {worst:.1e}, diff in {}", path.display()))
}

fn c3_growth() -> Check {
    let start = Instant::now();
    let g = fields_transformed();
    let mut points = vec![[0.0; 6]];
    points.extend(random_points(3, 20, 0.3));
    for p in &points {
        let flag = growth_vector(&g, p, RANK_TOL).map_err(|e| format!("{p:?}: {e}"))?;
        ensure(flag.dims == [3, 6], format!("growth {:?} at {p:?}", flag.dims))?;
        let w = weights(&flag);
        ensure(w == [1, 1, 1, 2, 2, 2], format!("weights {w:?} at {p:?}"))?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(format!("(3,6) and (1,1,1,2,2,2) at {} points", points.len()))
}

fn c4_privileged() -> Check {
    let g = fields_transformed();
    let coords = PrivilegedCoordinates::at(&g, &[0.0; 6]).map_err(|e| e.to_string())?;
    let id = Matrix::identity(6);
    let residual = coords
        .transform
        .entries
        .mul(&coords.frame.matrix.entries)
        .sub(&id)
        .norm_inf();
    ensure(residual <= 1e-12, format!("|MG - I| = {residual:.2e}"))?;
    let report = verify_privileged(&coords.transform, &g, &[0.0; 6], coords.weights());
    ensure(report.pass, format!("{:?}", report.checks))?;

    let s = 3f64.sqrt();
    let mut rows: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..6).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    rows.push(vec![s / 2.0, 0.5, -2.0, 1.0, -1.0, s]);
    rows.push(vec![0.0, -1.0, -2.0, 1.0, 2.0, 0.0]);
    rows.push(vec![-s / 2.0, 0.5, -2.0, 1.0, -1.0, -s]);
    let reference = Matrix::from_rows(&rows);
    let reference_residual = reference.mul(&coords.frame.matrix.entries).sub(&id).norm_inf();
    let path = out_dir("c4").join("matrix_residual.json");
    let archive = json!({
        "constructed_residual": residual,
        "reference_residual": reference_residual,
        "constructed": coords.transform.entries.to_rows(),
        "reference": rows,
    });
    fs::write(&path, serde_json::to_string_pretty(&archive).unwrap()).map_err(|e| e.to_string())?;
    Ok(format!(
        "|MG - I| = {residual:.1e}, reference matrix residual {reference_residual:.2} archived"
    ))
}

fn c5_nilpotent() -> Check {
    let start = Instant::now();
    let approx = NilpotentApproximation::at(&fields_transformed(), &[0.0; 6]).map_err(|e| e.to_string())?;
    let hats = approx.hats_y();
    ensure(hats[2].to_string() == "d/dy3", format!("ĝ3 = {}", hats[2]))?;

    let poly = taylor(hats[0].component(3), &[0.0; 6], 1);
    let on_y2: f64 = poly
        .iter()
        .filter(|(a, _)| a.exponents() == [0, 1, 0, 0, 0, 0])
        .map(|(_, c)| c)
        .sum();
    ensure(
        (on_y2 + 0.5).abs() <= 1e-12,
        format!("ĝ1 d/dy4 coefficient on y2 is {on_y2}"),
    )?;

    for (i, r) in approx
        .first_order_reports()
        .map_err(|e| e.to_string())?
        .iter()
        .enumerate()
    {
        ensure(r.pass, format!("first order fails for g{}: {:?}", i + 1, r.violations))?;
    }
    let nil = approx.nilpotent_report().map_err(|e| e.to_string())?;
    ensure(nil.pass, format!("nilpotent check: {:?}", nil.nonzero_triples))?;
    within(start.elapsed(), 5.0)?;
    Ok("ĝ3 = d/dy3, y2 coefficient -1/2, first-order and nilpotent certificates hold".into())
}

fn c6_dilation() -> Check {
    let approx = NilpotentApproximation::at(&fields_transformed(), &[0.0; 6]).map_err(|e| e.to_string())?;
    let w = approx.coords.weights();
    let mut worst = 0.0f64;
    for y in random_points(6, 20, 1.0) {
        for lambda in [0.5, 2.0] {
            let dy = dilate(&y, w, lambda);
            for h in &approx.hats {
                let (a, b) = (h.eval(&dy), h.eval(&y));
                for j in 0..6 {
                    let expected = b[j] * lambda.powi(w[j] as i32 - 1);
                    let scale = expected.abs().max(a[j].abs());
                    if scale > 0.0 {
                        worst = worst.max((a[j] - expected).abs() / scale);
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-10, format!("relative error {worst:.2e}"))?;
    Ok(format!("worst relative error {worst:.1e}"))
}

fn c7_periodic() -> Check {
    let start = Instant::now();
    let g = fields_transformed();
    let mut lines = Vec::new();
    for kind in InputKind::BUILT_IN {
        let a = bracket_displacement(&g, kind, 0.05, 1.0, DEFAULT_STEPS).map_err(|e| e.to_string())?;
        let half = bracket_displacement(&g, kind, 0.025, 1.0, DEFAULT_STEPS).map_err(|e| e.to_string())?;
        let ratio = a.magnitude / half.magnitude;
        ensure(
            a.direction_cosine >= 0.98,
            format!("{kind}: cosine {:.5}", a.direction_cosine),
        )?;
        ensure((3.6..=4.4).contains(&ratio), format!("{kind}: ratio {ratio:.4}"))?;
        lines.push(format!("{kind}: cos {:.5} ratio {ratio:.3}", a.direction_cosine));
    }
    within(start.elapsed(), 10.0)?;
    Ok(lines.join(", "))
}

fn c8_quality() -> Check {
    let g = fields_transformed();
    let approx = NilpotentApproximation::at(&g, &[0.0; 6]).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for kind in InputKind::BUILT_IN {
        let rel: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&a| {
                let r = compare(&g, &approx.hats_x, &Experiment::new(kind, a), PARAM)
                    .map_err(|e| e.to_string())?
                    .report;
                Ok(r.endpoint_dev / r.magnitude)
            })
            .collect::<Result<_, String>>()?;
        ensure(rel.windows(2).all(|w| w[1] < w[0]), format!("{kind}: {rel:?}"))?;
        lines.push(format!("{kind}: {:.3} > {:.3} > {:.3}", rel[0], rel[1], rel[2]));
    }
    Ok(lines.join(", "))
}

fn c9_slip() -> Check {
    let g = fields_transformed();
    let approx = NilpotentApproximation::at(&g, &[0.0; 6]).map_err(|e| e.to_string())?;
    let mut exact_worst = 0.0f64;
    for kind in InputKind::BUILT_IN {
        for a in [0.2, 0.1, 0.05, 0.025] {
            let u = ControlInput::periodic(kind, a, 1.0).map_err(|e| e.to_string())?;
            let traj =
                integrate(&g, &u, Configuration::origin(), u.period(), DEFAULT_STEPS).map_err(|e| e.to_string())?;
            exact_worst = exact_worst.max(max_slip(&traj, &g, &u, PARAM));
            let r = compare(&g, &approx.hats_x, &Experiment::new(kind, a), PARAM)
                .map_err(|e| e.to_string())?
                .report;
            exact_worst = exact_worst.max(r.exact_max_slip);
        }
    }
    ensure(exact_worst <= 1e-8, format!("exact slip {exact_worst:.2e}"))?;

    let dir = out_dir("c9");
    let mut nil = Vec::new();
    for kind in InputKind::BUILT_IN {
        trident(&["compare", "--input", kind.label(), "--emit", "csv"], &dir)?;
        let text = fs::read_to_string(dir.join(format!("compare_{}.json", kind.label()))).map_err(|e| e.to_string())?;
        let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let slip = v["max_slip"].as_f64().ok_or("max_slip missing from comparison JSON")?;
        ensure(slip > 0.0, format!("{kind}: nilpotent slip {slip}"))?;
        nil.push(slip);
    }
    Ok(format!("exact {exact_worst:.1e}, nilpotent {nil:.3?}"))
}

fn c10_determinism() -> Check {
    let config = out_dir("c10").join("run.json");
    fs::write(
        &config,
        r#"{"input": "13", "amplitude": 0.07, "steps": 800, "amplitudes": [0.2, 0.1]}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = config.to_str().unwrap();
    let runs: Vec<PathBuf> = (0..2).map(|k| out_dir(&format!("c10/run{k}"))).collect();
    for dir in &runs {
        for cmd in ["analyze", "simulate", "compare", "sweep"] {
            let o = Command::new(env!("CARGO_BIN_EXE_trident"))
                .args(["--config", cfg, cmd])
                .env("TRIDENT_OUT_DIR", dir)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(o.status.success(), format!("{cmd} failed"))?;
            fs::write(dir.join(format!("{cmd}.stdout")), &o.stdout).map_err(|e| e.to_string())?;
        }
    }
    let mut names: Vec<_> = fs::read_dir(&runs[0])
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let checked: Vec<_> = names
        .iter()
        .filter(|n| {
            let n = n.to_string_lossy();
            n.ends_with(".csv") || n.ends_with(".json") || n.ends_with(".stdout")
        })
        .collect();
    ensure(checked.len() >= 8, format!("only {} outputs", checked.len()))?;
    for n in &checked {
        let a = fs::read(runs[0].join(n)).map_err(|e| e.to_string())?;
        let b = fs::read(runs[1].join(n)).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{} differs", n.to_string_lossy()))?;
    }
    Ok(format!("{} CSV/JSON outputs identical", checked.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("bracket reproduction", c1_bracket12),
        ("bracket discrepancy ledger", c2_bracket_ledger),
        ("growth vector and weights", c3_growth),
        ("privileged transform", c4_privileged),
        ("nilpotent approximation", c5_nilpotent),
        ("dilation homogeneity", c6_dilation),
        ("periodic-input realization", c7_periodic),
        ("approximation quality", c8_quality),
        ("slip", c9_slip),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
