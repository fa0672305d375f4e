//! Eigenvalues of -y'' = λy with y(0) = y(a) = y(1) and their multiplicities.
//!
//! Triple eigenvalues appear exactly when `a` is rational. The search results
//! are printed next to the closed-form spectrum.
//!
//! ```bash
//! cargo run --release --example dexin_multiplicity
//! ```

use nonlocal_spectrum::oracles::{dexin_spectrum, DexinSpec};
use nonlocal_spectrum::region::ContourRegion;
use nonlocal_spectrum::rootfinder::{find_spectrum, SearchOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let region = ContourRegion::new(1.0, 600.0, -1.0, 1.0)?;
    for (label, a) in [
        ("1/2", 0.5),
        ("1/3", 1.0 / 3.0),
        ("1/√2", std::f64::consts::FRAC_1_SQRT_2),
    ] {
        let spec = DexinSpec::new(a)?;
        let started = std::time::Instant::now();
        let found = find_spectrum(&spec.problem(), &region, &SearchOptions::default())?;
        let exact: Vec<(f64, u32)> = dexin_spectrum(spec, region.re_max)?
            .into_iter()
            .filter(|&(x, _)| x >= region.re_min)
            .collect();
        println!(
            "a = {label}: {} zeros counted in {region}, {:.1?}",
            found.total_count,
            started.elapsed()
        );
        for (e, (x, m)) in found.eigenvalues.iter().zip(&exact) {
            println!(
                "  λ = {:>20.12}  mult {}  (exact {:>20.12}, mult {m}, rel err {:.1e})",
                e.location.re,
                e.multiplicity,
                x,
                (e.location.re - x).abs() / x
            );
        }
    }
    Ok(())
}
