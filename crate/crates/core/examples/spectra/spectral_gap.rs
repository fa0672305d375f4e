//! The spectral gap as a function of the drift.
//!
//! For constant coefficients with jumps to 1/2 the gap has a closed form with a
//! branch switch at `b1 = 4√3π`. The search-based gap is compared against it.
//!
//! ```bash
//! cargo run --release --example spectral_gap
//! ```

use std::f64::consts::PI;

use nonlocal_spectrum::oracles::{de_gap, DeSpec};
use nonlocal_spectrum::region::ContourRegion;
use nonlocal_spectrum::rootfinder::{spectral_gap, SearchOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("branch switch at b1 = {:.6}", 4.0 * 3f64.sqrt() * PI);
    println!("{:>6} {:>22} {:>22} {:>10}", "b1", "closed form", "search", "abs diff");
    for k in 0..=8 {
        let b1 = 5.0 * k as f64;
        let spec = DeSpec::new(-1.0, b1)?;
        // The complex branch has imaginary parts ±4π b1, so the box grows with b1.
        let h = 4.0 * PI * b1 + 20.0;
        let region = ContourRegion::new(1.0, 170.0, -h, h)?;
        let exact = de_gap(spec);
        let found = spectral_gap(&spec.problem(), &region, &SearchOptions::default())?;
        println!(
            "{b1:>6.1} {exact:>22.14} {found:>22.14} {:>10.1e}",
            (found - exact).abs()
        );
    }
    Ok(())
}
