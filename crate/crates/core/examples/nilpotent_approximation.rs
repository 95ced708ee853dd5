//! Nilpotent approximation of the trident at the origin: hat fields in
//! privileged and original coordinates, with both certificates.
//!
//! ```bash
//! cargo run --example nilpotent_approximation
//! ```

use std::error::Error;

use trident_nilpotent::nilpotent::{dilate, NilpotentApproximation};
use trident_nilpotent::trident::fields_transformed;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let g = fields_transformed();
    let approx = NilpotentApproximation::at(&g, &[0.0; 6])?;

    println!("in privileged coordinates:");
    for (i, h) in approx.hats_y().iter().enumerate() {
        println!("  ĝ{} = {h}", i + 1);
    }
    println!("back in x:");
    for (i, h) in approx.hats_x.iter().enumerate() {
        println!("  ĝ{} = {h}", i + 1);
    }

    for (i, r) in approx.first_order_reports()?.iter().enumerate() {
        println!("g{} - ĝ{} has order >= 0: {}", i + 1, i + 1, r.pass);
    }
    let nil = approx.nilpotent_report()?;
    for b in &nil.pairwise {
        println!(
            "[ĝ{},ĝ{}] = {:?} (constant: {})",
            b.pair.0, b.pair.1, b.value, b.constant
        );
    }
    println!("all brackets of length 3 vanish: {}", nil.nonzero_triples.is_empty());

    // homogeneity: ĝ_i(δ_λ y)_j = λ^(w_j - 1) ĝ_i(y)_j
    let w = approx.coords.weights();
    let y = [0.3, -0.2, 0.1, 0.05, 0.4, -0.3];
    let lambda = 2.0;
    let h = &approx.hats[0];
    let (a, b) = (h.eval(&dilate(&y, w, lambda)), h.eval(&y));
    let scaled: Vec<f64> = b.iter().zip(w).map(|(v, &wj)| v * lambda.powi(wj as i32 - 1)).collect();
    println!("ĝ1(δ_2 y) = {a:.4?}\nscaled    = {scaled:.4?}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
