//! Integrate the fundamental system and compare it with the exact solution.
//!
//! For constant coefficients the solutions with initial data (1, 0) and (0, 1)
//! are known in closed form, so the adaptive integrator can be checked directly.
//! Solutions grow like `exp(|√λ| x)`, so errors are reported relative to the
//! largest magnitude of each component on [0, 1].
//!
//! ```bash
//! cargo run --release --example fundamental_solutions
//! ```

use nonlocal_spectrum::ode::{closed_form_basis, integrate_basis, ToleranceSettings};
use nonlocal_spectrum::problem::Problem;
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (b0, b1) = (-1.0, 2.5);
    let problem = Problem::constant_with_dirac(b0, b1, 0.5);
    let tol = ToleranceSettings::default();

    println!(
        "{:>22} {:>8} {:>14} {:>14}",
        "lambda", "steps", "scaled error", "Wronskian err"
    );
    for lambda in [
        Complex64::new(1.0, 0.0),
        Complex64::new(-50.0, 30.0),
        Complex64::new(400.0, -200.0),
        Complex64::new(5000.0, 5000.0),
    ] {
        let basis = integrate_basis(&problem, lambda, tol)?;
        let mut err = [0.0f64; 8];
        let mut size = [0.0f64; 8];
        let mut w_err: f64 = 0.0;
        for k in 0..=200 {
            let x = k as f64 / 200.0;
            let num = basis.eval(x)?;
            let exact = closed_form_basis(b0, b1, lambda, x)?;
            for (i, (a, b)) in num.to_array().iter().zip(exact.to_array()).enumerate() {
                err[i] = err[i].max((a - b).norm());
                size[i] = size[i].max(b.norm());
            }
            // The Wronskian is exp(-∫ b1/b0) = exp(b1 x) here.
            let w = (b1 * x).exp();
            w_err = w_err.max((num.wronskian() - w).norm() / (num.y1.norm() * num.y2p.norm()).max(w));
        }
        let scaled = (0..8).map(|i| err[i] / size[i].max(1.0)).fold(0.0, f64::max);
        println!(
            "{:>22} {:>8} {:>14.3e} {:>14.3e}",
            format!("{lambda}"),
            basis.stats().steps,
            scaled,
            w_err
        );
    }
    Ok(())
}
