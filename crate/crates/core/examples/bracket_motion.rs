//! Periodic inputs on a pair of fields produce net motion along their
//! bracket, with a displacement that shrinks like the square of the amplitude.
//!
//! ```bash
//! cargo run --release --example bracket_motion
//! ```

use std::error::Error;

use trident_nilpotent::sim::{bracket_displacement, InputKind};
use trident_nilpotent::trident::fields_transformed;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let g = fields_transformed();
    println!(
        "{:>5} {:>6} {:>10} {:>12} {:>7}",
        "input", "A", "cosine", "|Δq|", "ratio"
    );
    for kind in InputKind::BUILT_IN {
        let mut previous: Option<f64> = None;
        for a in [0.2, 0.1, 0.05] {
            let d = bracket_displacement(&g, kind, a, 1.0, 2000)?;
            let ratio = previous.map(|m| format!("{:.3}", m / d.magnitude)).unwrap_or_default();
            println!(
                "{kind:>5} {a:>6} {:>10.6} {:>12.4e} {ratio:>7}",
                d.direction_cosine, d.magnitude
            );
            previous = Some(d.magnitude);
        }
        let d = bracket_displacement(&g, kind, 0.05, 1.0, 2000)?;
        println!(
            "      bracket {:.3?}\n      endpoint {:.3?}",
            d.bracket,
            d.endpoint.to_array()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
