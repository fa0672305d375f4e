//! Sample the characteristic determinant on a grid and write plot data.
//!
//! The CSV has columns `re_lambda,im_lambda,re_delta,im_delta`. Sign changes of
//! Δ along the real axis bracket the real eigenvalues.
//!
//! ```bash
//! cargo run --release --example delta_grid
//! ```

use nonlocal_spectrum::characteristic::delta_grid;
use nonlocal_spectrum::io::write_grid_csv;
use nonlocal_spectrum::ode::ToleranceSettings;
use nonlocal_spectrum::oracles::DexinSpec;
use nonlocal_spectrum::region::ContourRegion;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = DexinSpec::new(0.25)?.problem();
    let region = ContourRegion::new(1.0, 700.0, -40.0, 40.0)?;
    let grid = delta_grid(&problem, &region, 141, 9, ToleranceSettings::default())?;

    let path = std::env::temp_dir().join("nlspec-delta-grid.csv");
    write_grid_csv(std::fs::File::create(&path)?, &grid)?;
    println!("wrote {} samples to {}", grid.values.len(), path.display());

    // The middle row lies on the real axis, where Δ is real.
    let j = grid.ny / 2;
    println!("sign changes of Re Δ on the real axis:");
    for i in 1..grid.nx {
        let (a, b) = (grid.value(i - 1, j).re, grid.value(i, j).re);
        if a * b < 0.0 {
            println!(
                "  between {:.3} and {:.3}",
                grid.point(i - 1, j).re,
                grid.point(i, j).re
            );
        }
    }
    println!("(a double zero of Δ does not change sign and is invisible to this scan)");
    Ok(())
}
