//! Build a problem in code, save it as a problem file, load it back and validate.
//!
//! ```bash
//! cargo run --release --example problem_file
//! ```

use nonlocal_spectrum::io;
use nonlocal_spectrum::problem::{Atom, BoundaryMeasure, Coefficient, Density, Problem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // b0 is linear on [0, 0.4) and quadratic on [0.4, 1]; nu0 mixes an atom with a density.
    let problem = Problem::new(
        Coefficient::piecewise(vec![0.0, 0.4, 1.0], vec![vec![-1.0, -0.5], vec![-1.5, 0.2, -0.1]]),
        Coefficient::constant(0.75),
        BoundaryMeasure {
            atoms: vec![Atom { x: 0.3, w: 0.5 }],
            density: Some(Density {
                breakpoints: vec![0.0, 0.5, 1.0],
                values: vec![1.0, 0.0],
            }),
        },
        BoundaryMeasure::uniform(),
    );
    println!("in-memory problem valid: {}", problem.validate().is_valid());

    let dir = std::env::temp_dir().join("nlspec-problem-file");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("mixed.json");
    io::write_problem_file(&problem, &path)?;
    println!("wrote {}", path.display());

    let loaded = io::load_problem(&path)?;
    assert_eq!(loaded, problem);
    println!("reloaded problem is identical");

    // Half the mass of nu0 is missing and b1 carries an unknown key.
    let broken = r#"{
        "version": 1,
        "b0": {"type": "constant", "value": -1.0},
        "b1": {"type": "constant", "value": 0.0, "units": "1/s"},
        "nu0": {"atoms": [{"x": 0.5, "w": 0.5}]},
        "nu1": {"atoms": [{"x": 0.5, "w": 1.0}]}
    }"#;
    let report = io::parse_problem(broken)?.validate();
    println!("broken document has {} violation(s):", report.violations.len());
    for v in &report.violations {
        println!("  {v}");
    }

    match io::parse_problem("{\"version\": 1, \"b0\": ") {
        Err(e) => println!("truncated document: {e}"),
        Ok(_) => unreachable!("a truncated document cannot parse"),
    }
    Ok(())
}
