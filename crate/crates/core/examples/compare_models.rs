//! Runs the exact model and its nilpotent approximation under the same
//! periodic input, then writes CSV trajectories, an SVG overlay of the
//! wheel paths and a JSON report.
//!
//! ```bash
//! cargo run --release --example compare_models -- out/
//! ```

use std::error::Error;
use std::fs;
use std::path::Path;

use trident_nilpotent::io;
use trident_nilpotent::nilpotent::NilpotentApproximation;
use trident_nilpotent::sim::{compare, Experiment, InputKind};
use trident_nilpotent::trident::{fields_transformed, Parametrization};

pub fn run_example_in(dir: &Path) -> Result<(), Box<dyn Error>> {
    let g = fields_transformed();
    let approx = NilpotentApproximation::at(&g, &[0.0; 6])?;
    fs::create_dir_all(dir)?;

    for kind in InputKind::BUILT_IN {
        let mut e = Experiment::new(kind, 0.1);
        e.periods = 2;
        let c = compare(&g, &approx.hats_x, &e, Parametrization::Transformed)?;
        let r = &c.report;
        println!(
            "input {kind}: endpoint dev {:.3e} of {:.3e} travelled, nilpotent slip {:.2e}, exact slip {:.1e}",
            r.endpoint_dev, r.magnitude, r.max_slip, r.exact_max_slip
        );

        fs::write(dir.join(format!("exact_{kind}.csv")), io::trajectory_csv(&c.exact))?;
        fs::write(
            dir.join(format!("nilpotent_{kind}.csv")),
            io::trajectory_csv(&c.nilpotent),
        )?;
        let svg = io::overlay_svg(
            &format!("input {kind}"),
            &c.exact.poses(Parametrization::Transformed),
            Some(&c.nilpotent.poses(Parametrization::Transformed)),
        );
        fs::write(dir.join(format!("compare_{kind}.svg")), svg)?;
        fs::write(
            dir.join(format!("compare_{kind}.json")),
            serde_json::to_string_pretty(r)?,
        )?;
    }
    println!("files in {}", dir.display());
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    run_example_in(&std::env::temp_dir().join("trident-compare"))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    match std::env::args_os().nth(1) {
        Some(dir) => run_example_in(Path::new(&dir)),
        None => run_example(),
    }
}
