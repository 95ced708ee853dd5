//! CSV and SVG emission. Numbers in CSV files are written with 17
//! significant digits so identical runs produce identical bytes.

use std::fmt::Write as _;

use crate::sim::{ComparisonReport, Trajectory};
use crate::trident::{BodyPose, Parametrization};

fn num(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("write to String");
}

fn row(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        num(out, v);
    }
    out.push('\n');
}

pub const TRAJECTORY_HEADER: &str = "t,x1,x2,x3,x4,x5,x6";

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 170);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        row(&mut out, std::iter::once(s.t).chain(s.q.to_array()));
    }
    out
}

/// Side-by-side states of two runs sharing time stamps: `t,x1..x6,xhat1..xhat6`.
pub fn comparison_csv(exact: &Trajectory, approx: &Trajectory) -> String {
    let mut out = String::from("t,x1,x2,x3,x4,x5,x6,xhat1,xhat2,xhat3,xhat4,xhat5,xhat6\n");
    for (a, b) in exact.samples.iter().zip(&approx.samples) {
        row(
            &mut out,
            std::iter::once(a.t).chain(a.q.to_array()).chain(b.q.to_array()),
        );
    }
    out
}

pub const KINEMATICS_HEADER: &str = "t,root_x,root_y,v1_x,v1_y,v2_x,v2_y,v3_x,v3_y,w1_x,w1_y,w2_x,w2_y,w3_x,w3_y";

fn pose_values(p: &BodyPose) -> impl Iterator<Item = f64> + '_ {
    p.root
        .into_iter()
        .chain(p.vertices.into_iter().flatten())
        .chain(p.wheels.into_iter().flatten())
}

pub fn kinematics_csv(traj: &Trajectory, param: Parametrization) -> String {
    let mut out = String::from(KINEMATICS_HEADER);
    out.push('\n');
    for (s, pose) in traj.samples.iter().zip(traj.poses(param)) {
        row(&mut out, std::iter::once(s.t).chain(pose_values(&pose)));
    }
    out
}

pub const SWEEP_HEADER: &str =
    "kind,amplitude,omega,max_dev,endpoint_dev,relative_endpoint_dev,magnitude,direction_cosine,max_slip,exact_max_slip";

/// Convergence table, one row per report.
pub fn sweep_csv(reports: &[ComparisonReport]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(r.kind.label());
        out.push(',');
        let rel = if r.magnitude > 0.0 {
            r.endpoint_dev / r.magnitude
        } else {
            0.0
        };
        row(
            &mut out,
            [
                r.amplitude,
                r.omega,
                r.max_dev,
                r.endpoint_dev,
                rel,
                r.magnitude,
                r.direction_cosine,
                r.max_slip,
                r.exact_max_slip,
            ],
        );
    }
    out
}

const TRACK_COLOURS: [&str; 7] = [
    "#222222", "#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
];
const TRACK_NAMES: [&str; 7] = [
    "root", "vertex 1", "vertex 2", "vertex 3", "wheel 1", "wheel 2", "wheel 3",
];

fn tracks(poses: &[BodyPose]) -> [Vec<[f64; 2]>; 7] {
    let mut t: [Vec<[f64; 2]>; 7] = Default::default();
    for p in poses {
        t[0].push(p.root);
        for i in 0..3 {
            t[1 + i].push(p.vertices[i]);
            t[4 + i].push(p.wheels[i]);
        }
    }
    t
}

/// Planar overlay of root, vertex and wheel paths. `solid` is drawn with
/// continuous strokes, `dashed` (if any) with dashes on top.
pub fn overlay_svg(title: &str, solid: &[BodyPose], dashed: Option<&[BodyPose]>) -> String {
    const SIZE: f64 = 600.0;
    const MARGIN: f64 = 30.0;
    let sets: Vec<[Vec<[f64; 2]>; 7]> = std::iter::once(solid).chain(dashed).map(tracks).collect();

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in sets.iter().flatten().flatten() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |p: [f64; 2]| (MARGIN + (p[0] - lo[0]) * scale, SIZE - MARGIN - (p[1] - lo[1]) * scale);

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">{}</text>"#,
        escape(title)
    )
    .unwrap();
    for (set_index, set) in sets.iter().enumerate() {
        let dash = if set_index == 0 {
            ""
        } else {
            r#" stroke-dasharray="6 4""#
        };
        for (k, track) in set.iter().enumerate() {
            let mut points = String::new();
            for (i, p) in track.iter().enumerate() {
                let (x, y) = map(*p);
                if i > 0 {
                    points.push(' ');
                }
                write!(points, "{x:.3},{y:.3}").unwrap();
            }
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{points}"><title>{}</title></polyline>"#,
                TRACK_COLOURS[k], TRACK_NAMES[k]
            )
            .unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{integrate, ControlInput};
    use crate::trident::{fields_transformed, Configuration};

    fn short_run() -> Trajectory {
        let u = ControlInput::periodic(crate::sim::InputKind::Bracket12, 0.1, 1.0).unwrap();
        integrate(&fields_transformed(), &u, Configuration::origin(), 1.0, 4).unwrap()
    }

    #[test]
    fn trajectory_csv_shape() {
        let csv = trajectory_csv(&short_run());
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], TRAJECTORY_HEADER);
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
        let t: f64 = lines[5].split(',').next().unwrap().parse().unwrap();
        assert_eq!(t, 1.0);
    }

    #[test]
    fn csv_round_trips_exactly() {
        let traj = short_run();
        let csv = trajectory_csv(&traj);
        for (line, s) in csv.lines().skip(1).zip(&traj.samples) {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(&v[1..], &s.q.to_array());
        }
    }

    #[test]
    fn kinematics_csv_columns() {
        let csv = kinematics_csv(&short_run(), Parametrization::Transformed);
        let n = KINEMATICS_HEADER.split(',').count();
        assert!(csv.lines().all(|l| l.split(',').count() == n));
    }

    #[test]
    fn svg_has_solid_and_dashed_tracks() {
        let traj = short_run();
        let poses = traj.poses(Parametrization::Transformed);
        let svg = overlay_svg("a < b", &poses, Some(&poses));
        assert_eq!(svg.matches("<polyline").count(), 14);
        assert_eq!(svg.matches("stroke-dasharray").count(), 7);
        assert!(svg.contains("a &lt; b"));
    }
}
