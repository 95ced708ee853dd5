//! Builds the adapted frame at a point, inverts it into privileged
//! coordinates and checks the order of every new coordinate.
//!
//! ```bash
//! cargo run --example privileged_coordinates
//! ```

use std::error::Error;

use trident_nilpotent::linalg::Matrix;
use trident_nilpotent::privcoord::{verify_privileged, PrivilegedCoordinates};
use trident_nilpotent::trident::fields_transformed;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let g = fields_transformed();
    let p = [0.0; 6];
    let coords = PrivilegedCoordinates::at(&g, &p)?;

    println!("frame G (columns g1 g2 g3 then brackets {:?}):", coords.frame.brackets);
    println!("{:10.6}", coords.frame.matrix.entries);
    println!("M = G^-1:");
    println!("{:10.6}", coords.transform.entries);

    let residual = coords
        .transform
        .entries
        .mul(&coords.frame.matrix.entries)
        .sub(&Matrix::identity(6))
        .norm_inf();
    println!("|M G - I| = {residual:.2e}\n");

    for j in 0..6 {
        println!("y{} = {}", j + 1, coords.coordinate_function(j).display('x'));
    }

    let report = verify_privileged(&coords.transform, &g, &p, coords.weights());
    println!();
    for c in &report.checks {
        println!(
            "y{}: weight {} order {:?} {}",
            c.coordinate,
            c.weight,
            c.order,
            if c.pass { "ok" } else { "FAIL" }
        );
    }

    // plain x - p is not privileged: the bracket directions have order 1
    let naive = verify_privileged(
        &trident_nilpotent::privcoord::FrameMatrix::transform(Matrix::identity(6)),
        &g,
        &p,
        coords.weights(),
    );
    let failing: Vec<usize> = naive.checks.iter().filter(|c| !c.pass).map(|c| c.coordinate).collect();
    println!("identity transform fails on coordinates {failing:?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
