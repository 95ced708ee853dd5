//! Lie brackets of the trident control fields and the growth vector they generate.
//!
//! ```bash
//! cargo run --example lie_brackets
//! ```

use std::error::Error;

use trident_nilpotent::trident::fields_transformed;
use trident_nilpotent::vfield::{fd_bracket, growth_vector, lie_bracket, RANK_TOL};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let g = fields_transformed();
    let origin = [0.0; 6];

    for (i, f) in g.iter().enumerate() {
        println!("g{} = {f}", i + 1);
    }
    println!();

    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let b = lie_bracket(&g[i], &g[j])?;
        let exact = b.eval(&origin);
        let fd = fd_bracket(&g[i], &g[j], &origin, 1e-5);
        let gap = exact.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!(
            "[g{},g{}](0) = {exact:.6?}   finite-difference gap {gap:.1e}",
            i + 1,
            j + 1
        );
    }

    let flag = growth_vector(&g, &origin, RANK_TOL)?;
    println!("\ngrowth vector {:?}, weights {:?}", flag.dims, flag.weights);

    // the flag is the same away from the origin
    let p = [0.1, -0.2, 0.3, 0.25, -0.1, 0.05];
    println!("at {p:?}: {:?}", growth_vector(&g, &p, RANK_TOL)?.dims);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
