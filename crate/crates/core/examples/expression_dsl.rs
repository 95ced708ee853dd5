//! The expression language: parsing, printing, derivatives and Taylor
//! expansion, then a user-defined control system analysed end to end.
//!
//! ```bash
//! cargo run --example expression_dsl
//! ```

use std::error::Error;

use trident_nilpotent::config::Model;
use trident_nilpotent::nilpotent::NilpotentApproximation;
use trident_nilpotent::symexpr::{parse, taylor, SNAP_TOL};
use trident_nilpotent::trident::fields_original;
use trident_nilpotent::vfield::{growth_vector, RANK_TOL};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let e = parse("2*sin(x1 - pi/6) * cos(x2) + x1*x1/3")?;
    println!("e        = {e}");
    println!("de/dx1   = {}", e.diff(0));
    println!("e(0.5,1) = {:.6}", e.eval(&[0.5, 1.0]));
    let t = taylor(&e, &[0.0, 0.0], 2);
    println!("taylor   = {}", t.to_expr());
    println!("snapped  = {}", t.snapped(SNAP_TOL).to_expr());

    match parse("sin(x1*x2)") {
        Ok(_) => unreachable!(),
        Err(err) => println!("rejected: {err}"),
    }

    // a model file: the original trident parametrisation, typed by hand
    let text = "\
        # one field per line
        cos(x3)*d/dx1 + sin(x3)*d/dx2 + sin(x4)*d/dx4 + sin(x5 + 2*pi/3)*d/dx5 + sin(x6 + 4*pi/3)*d/dx6
        -sin(x3)*d/dx1 + cos(x3)*d/dx2 - cos(x4)*d/dx4 - cos(x5 + 2*pi/3)*d/dx5 - cos(x6 + 4*pi/3)*d/dx6
        d/dx3 - (1 + cos(x4))*d/dx4 - (1 + cos(x5))*d/dx5 - (1 + cos(x6))*d/dx6
    ";
    let model = Model::from_dsl(text).map_err(|(line, col, msg)| format!("{line}:{col}: {msg}"))?;
    println!("\nmatches the built-in fields: {}", model.fields == fields_original());
    let p = [0.0; 6];
    let flag = growth_vector(&model.fields, &p, RANK_TOL)?;
    println!("growth vector {:?}, weights {:?}", flag.dims, flag.weights);
    let approx = NilpotentApproximation::at(&model.fields, &p)?;
    for (i, h) in approx.hats_y().iter().enumerate() {
        println!("  ĝ{} = {h}", i + 1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
