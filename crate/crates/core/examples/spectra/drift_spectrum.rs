//! Complex eigenvalues created by a constant drift.
//!
//! With `b0 = -1`, `b1 = 1` and both jump measures at 1/2 the spectrum has one
//! real branch and one branch of complex-conjugate pairs.
//!
//! ```bash
//! cargo run --release --example drift_spectrum
//! ```

use nonlocal_spectrum::oracles::{de_spectrum, DeSpec};
use nonlocal_spectrum::region::ContourRegion;
use nonlocal_spectrum::rootfinder::{find_spectrum, SearchOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = DeSpec::new(-1.0, 1.0)?;
    let region = ContourRegion::new(1.0, 400.0, -40.0, 40.0)?;
    let found = find_spectrum(&spec.problem(), &region, &SearchOptions::default())?;
    let exact: Vec<_> = de_spectrum(spec, 4)?
        .into_iter()
        .filter(|(z, _)| region.contains(*z))
        .collect();

    println!("{} eigenvalues in {region}", found.total_count);
    for e in &found.eigenvalues {
        let nearest = exact
            .iter()
            .map(|(z, _)| (z - e.location).norm() / z.norm())
            .fold(f64::INFINITY, f64::min);
        let conj = found
            .eigenvalues
            .iter()
            .map(|o| (o.location - e.location.conj()).norm())
            .fold(f64::INFINITY, f64::min);
        println!(
            "  {:>36}  mult {}  rel err {:.1e}  conjugate partner at distance {:.1e}",
            format!("{:.10}", e.location),
            e.multiplicity,
            nearest,
            conj
        );
    }
    Ok(())
}
