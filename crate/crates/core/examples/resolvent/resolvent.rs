//! Solve `(L - λ) u = f` with nonlocal boundary conditions and check the result.
//!
//! The output is checked against the differential equation and both boundary
//! conditions, then compared with the Dirichlet and initial-value resolvents.
//!
//! ```bash
//! cargo run --release --example resolvent
//! ```

use nonlocal_spectrum::ode::ToleranceSettings;
use nonlocal_spectrum::problem::{BoundaryMeasure, Coefficient, Problem};
use nonlocal_spectrum::resolvent::{
    boundary_residuals, differential_residual, green_dirichlet_apply, resolvent_apply, tilde_resolvent_apply,
    SampledFunction,
};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem::new(
        Coefficient::piecewise(vec![0.0, 0.5, 1.0], vec![vec![-1.0, 0.4], vec![-0.6, -0.4, 0.2]]),
        Coefficient::constant(1.5),
        BoundaryMeasure::uniform(),
        BoundaryMeasure::dirac(0.25),
    );
    let tol = ToleranceSettings::new(1e-12, 1e-14);
    let lambda = Complex64::new(-20.0, 15.0);
    let f = SampledFunction::from_fn(257, |x| Complex64::new((3.0 * x).sin(), x * x))?;

    let u = resolvent_apply(&problem, lambda, &f, tol)?;
    let (bc0, bc1) = boundary_residuals(&problem, &u)?;
    println!("nonlocal resolvent at λ = {lambda}");
    println!("  max |u|                 {:.6e}", u.max_norm());
    println!(
        "  equation residual       {:.2e}",
        differential_residual(&problem, lambda, &u, &f)?
    );
    println!("  boundary residuals      {:.2e}, {:.2e}", bc0.norm(), bc1.norm());

    let g = green_dirichlet_apply(&problem, lambda, &f, tol)?;
    let t = tilde_resolvent_apply(&problem, lambda, &f, tol)?;
    println!(
        "Dirichlet resolvent:  u(0) = {:.1e}, u(1) = {:.1e}",
        g.values()[0].norm(),
        g.values()[256].norm()
    );
    println!("initial-value resolvent:  u(0) = {:.1e}", t.values()[0].norm());

    // The three solutions differ by solutions of the homogeneous equation.
    let diff = SampledFunction::new(
        u.nodes().to_vec(),
        u.values().iter().zip(g.values()).map(|(a, b)| a - b).collect(),
    )?;
    let zero = SampledFunction::from_fn(257, |_| Complex64::new(0.0, 0.0))?;
    println!(
        "u - u_dirichlet solves the homogeneous equation: residual {:.2e}",
        differential_residual(&problem, lambda, &diff, &zero)?
    );

    let path = std::env::temp_dir().join("nlspec-resolvent.csv");
    u.write_csv(std::fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}
