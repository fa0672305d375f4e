//! Spectrum of a problem with piecewise-polynomial coefficients and mixed measures.
//!
//! No closed form exists here, so the search runs on the adaptive integrator.
//! The count on the whole region is compared with the sum over two halves.
//!
//! ```bash
//! cargo run --release --example variable_coefficients
//! ```

use nonlocal_spectrum::characteristic::delta;
use nonlocal_spectrum::ode::ToleranceSettings;
use nonlocal_spectrum::problem::{Atom, BoundaryMeasure, Coefficient, Density, Problem};
use nonlocal_spectrum::region::ContourRegion;
use nonlocal_spectrum::rootfinder::{count_zeros, find_spectrum, SearchOptions};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem::new(
        Coefficient::piecewise(vec![0.0, 0.4, 1.0], vec![vec![-1.0, -0.5], vec![-1.5, 0.2, -0.1]]),
        Coefficient::piecewise(vec![0.0, 0.7, 1.0], vec![vec![0.5, 1.0], vec![2.0]]),
        BoundaryMeasure {
            atoms: vec![Atom { x: 0.3, w: 0.5 }],
            density: Some(Density {
                breakpoints: vec![0.0, 0.5, 1.0],
                values: vec![1.0, 0.0],
            }),
        },
        BoundaryMeasure::uniform(),
    );
    let tol = ToleranceSettings::default();
    println!(
        "|Δ(0)| = {:.2e}",
        delta(&problem, Complex64::new(0.0, 0.0), tol)?.norm()
    );

    let region = ContourRegion::new(1.0, 120.0, -10.0, 10.0)?;
    let left = ContourRegion::new(1.0, 60.5, -10.0, 10.0)?;
    let right = ContourRegion::new(60.5, 120.0, -10.0, 10.0)?;
    let whole = count_zeros(&problem, &region, tol)?;
    let halves = count_zeros(&problem, &left, tol)? + count_zeros(&problem, &right, tol)?;
    println!("zeros in {region}: {whole} (halves: {halves})");

    let spectrum = find_spectrum(&problem, &region, &SearchOptions::with_tol(tol))?;
    for e in &spectrum.eigenvalues {
        println!(
            "  λ = {:.10}  mult {}  |Δ| = {:.1e}",
            e.location, e.multiplicity, e.residual
        );
    }
    println!("{} determinant evaluations", spectrum.diagnostics.evaluations);
    Ok(())
}
