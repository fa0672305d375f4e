use std::fmt::Display;
use std::io::Write;

use nonlocal_spectrum::problem::{Atom, BoundaryMeasure, Coefficient, Density, Problem};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Prints the verdict line for a criterion and fails the test when `ok` is false.
///
/// The line is written to the raw stderr handle so the test harness does not
/// capture it.
pub fn verdict(id: &str, title: &str, ok: bool, detail: impl Display) {
    let line = format!(
        "criterion {id} {}: {title} [{detail}]\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "{}", line.trim_end());
}

/// Random sorted breakpoints `0 = t0 < ... < tn = 1` with `n` in `1..=max_pieces`.
fn mesh(r: &mut ChaCha8Rng, max_pieces: usize) -> Vec<f64> {
    let n = r.gen_range(1..=max_pieces);
    let mut inner: Vec<f64> = (1..n).map(|_| r.gen_range(0.1..0.9)).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup_by(|a, b| (*a - *b).abs() < 0.05);
    let mut out = vec![0.0];
    out.extend(inner);
    out.push(1.0);
    out
}

fn piecewise(r: &mut ChaCha8Rng, lead: impl Fn(&mut ChaCha8Rng) -> f64, spread: f64) -> Coefficient {
    let bp = mesh(r, 3);
    let polys = (0..bp.len() - 1)
        .map(|_| {
            let deg = r.gen_range(0..=3);
            let mut p = vec![lead(r)];
            p.extend((0..deg).map(|_| r.gen_range(-spread..spread)));
            p
        })
        .collect();
    Coefficient::piecewise(bp, polys)
}

/// A probability measure with up to two atoms and an optional density, normalised to mass 1.
pub fn random_measure(r: &mut ChaCha8Rng, force_mixed: bool) -> BoundaryMeasure {
    let n_atoms = if force_mixed {
        r.gen_range(1..=2)
    } else {
        r.gen_range(0..=2)
    };
    let mut atoms: Vec<Atom> = (0..n_atoms)
        .map(|_| Atom {
            x: r.gen_range(0.05..0.95),
            w: r.gen_range(0.2..1.0),
        })
        .collect();
    atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
    atoms.dedup_by(|a, b| (a.x - b.x).abs() < 1e-3);
    let mut density = if force_mixed || atoms.is_empty() || r.gen_bool(0.5) {
        let bp = mesh(r, 3);
        let values = (0..bp.len() - 1).map(|_| r.gen_range(0.0..1.0)).collect();
        Some(Density {
            breakpoints: bp,
            values,
        })
    } else {
        None
    };
    let mass = BoundaryMeasure {
        atoms: atoms.clone(),
        density: density.clone(),
    }
    .mass();
    for a in &mut atoms {
        a.w /= mass;
    }
    if let Some(d) = &mut density {
        for v in &mut d.values {
            *v /= mass;
        }
    }
    BoundaryMeasure { atoms, density }
}

/// A valid problem with piecewise-cubic coefficients and mixed measures.
pub fn random_problem(r: &mut ChaCha8Rng) -> Problem {
    loop {
        let b0 = piecewise(r, |r| -r.gen_range(0.6..2.0), 0.15);
        let b1 = piecewise(r, |r| r.gen_range(-2.0..2.0), 1.0);
        let mixed_first = r.gen_bool(0.5);
        let nu0 = random_measure(r, mixed_first);
        let nu1 = random_measure(r, !mixed_first);
        let p = Problem::new(b0, b1, nu0, nu1);
        if p.validate().is_valid() {
            return p;
        }
    }
}

/// A point uniformly distributed in the disk `|λ| <= radius`.
pub fn disk_point(r: &mut ChaCha8Rng, radius: f64) -> C {
    let rad = radius * r.gen_range(0.0f64..1.0).sqrt();
    C::from_polar(rad, r.gen_range(0.0..std::f64::consts::TAU))
}
