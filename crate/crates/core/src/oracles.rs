//! Closed-form spectra for two explicitly solvable families.
//!
//! * `dexin`: `-y'' = λy` with `y(0) = y(a) = y(1)`, i.e. `b0 = -1`, `b1 = 0`,
//!   `ν0 = ν1 = δ_a`.
//! * `de`: constant `b0 < 0`, `b1`, with `y(0) = y(1/2) = y(1)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{Atom, BoundaryMeasure, Problem};

type C = Complex64;

/// The `dexin` family, parametrised by the atom location `a ∈ (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DexinSpec {
    pub a: f64,
}

impl DexinSpec {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Domain(format!("a = {a} must lie in (0, 1)")));
        }
        Ok(DexinSpec { a })
    }

    pub fn problem(&self) -> Problem {
        Problem::constant_with_dirac(-1.0, 0.0, self.a)
    }

    /// Recognises `b0 = -1`, `b1 = 0` with both measures the same unit atom.
    pub fn from_problem(problem: &Problem) -> Option<Self> {
        let (b0, b1) = problem.constant_coefficients()?;
        let a = single_atom(problem.nu0())?;
        (b0 == -1.0 && b1 == 0.0 && single_atom(problem.nu1()) == Some(a)).then_some(DexinSpec { a })
    }
}

/// The `de` family with constant coefficients and atoms at 1/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeSpec {
    pub b0: f64,
    pub b1: f64,
}

impl DeSpec {
    pub fn new(b0: f64, b1: f64) -> Result<Self> {
        if !(b0 < 0.0) || !b1.is_finite() {
            return Err(Error::Domain(format!("need b0 < 0 and finite b1, got ({b0}, {b1})")));
        }
        Ok(DeSpec { b0, b1 })
    }

    pub fn problem(&self) -> Problem {
        Problem::constant_with_dirac(self.b0, self.b1, 0.5)
    }

    pub fn from_problem(problem: &Problem) -> Option<Self> {
        let (b0, b1) = problem.constant_coefficients()?;
        let half = single_atom(problem.nu0())? == 0.5 && single_atom(problem.nu1())? == 0.5;
        (half && b0 < 0.0).then_some(DeSpec { b0, b1 })
    }

    /// `q = (b1 / 2b0)^2`, the shift in `u = -λ/b0 - q`.
    pub fn q(&self) -> f64 {
        (self.b1 / (2.0 * self.b0)).powi(2)
    }

    /// `u = -λ/b0 - q`.
    pub fn u_of_lambda(&self, lambda: C) -> C {
        -lambda / self.b0 - self.q()
    }
}

fn single_atom(m: &BoundaryMeasure) -> Option<f64> {
    match (m.atoms.as_slice(), &m.density) {
        ([Atom { x, w }], None) if *w == 1.0 => Some(*x),
        _ => None,
    }
}

/// `Δ(λ) = -(4/√λ) sin(√λ(1-a)/2) sin(√λ a/2) sin(√λ/2)`.
pub fn dexin_delta(spec: DexinSpec, lambda: C) -> C {
    let a = spec.a;
    if lambda.norm() < 1e-8 {
        return -lambda * (a * (1.0 - a) / 2.0);
    }
    let s = lambda.sqrt();
    -(s * ((1.0 - a) / 2.0)).sin() * (s * (a / 2.0)).sin() * (s / 2.0).sin() * 4.0 / s
}

/// Zeros of [`dexin_delta`] in `[0, re_max]` with multiplicities.
///
/// Each sine factor `sin(√λ c/2)` vanishes at `λ = (2nπ/c)^2`. Coincident zeros
/// of all three factors (relative tolerance 1e-9) form a triple eigenvalue.
pub fn dexin_spectrum(spec: DexinSpec, re_max: f64) -> Result<Vec<(f64, u32)>> {
    if !(re_max > 0.0) {
        return Err(Error::Domain(format!("re_max = {re_max} must be positive")));
    }
    let mut zeros: Vec<(f64, usize)> = Vec::new();
    for (id, c) in [1.0 - spec.a, spec.a, 1.0].into_iter().enumerate() {
        for n in 1.. {
            let lam = (2.0 * n as f64 * PI / c).powi(2);
            if lam > re_max {
                break;
            }
            zeros.push((lam, id));
        }
    }
    zeros.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut out = vec![(0.0, 1)];
    let mut i = 0;
    while i < zeros.len() {
        let mut j = i + 1;
        while j < zeros.len() && (zeros[j].0 - zeros[i].0).abs() <= 1e-9 * zeros[i].0 {
            j += 1;
        }
        let mut ids: Vec<usize> = zeros[i..j].iter().map(|z| z.1).collect();
        ids.sort_unstable();
        ids.dedup();
        let mean = zeros[i..j].iter().map(|z| z.0).sum::<f64>() / (j - i) as f64;
        out.push((mean, if ids.len() == 3 { 3 } else { 1 }));
        i = j;
    }
    Ok(out)
}

/// Eigenvalues of the `de` problem for `n ≤ n_max`, each simple.
///
/// `λ = -4b0 n²π² - b1²/(4b0)` for `n ≥ 1`, and `λ = -16b0 n²π² ± 4b1 nπ i`
/// for `n ≥ 0` (the `n = 0` member is 0). Sorted by real then imaginary part.
pub fn de_spectrum(spec: DeSpec, n_max: usize) -> Result<Vec<(C, u32)>> {
    if spec.b1 == 0.0 {
        return Err(Error::OracleRoute(
            "b1 = 0 has triple eigenvalues; use the dexin oracle with a = 1/2 scaled by -b0".into(),
        ));
    }
    let (b0, b1) = (spec.b0, spec.b1);
    let mut out = vec![(C::new(0.0, 0.0), 1)];
    for n in 1..=n_max {
        let nf = n as f64;
        out.push((C::new(-4.0 * b0 * nf * nf * PI * PI - b1 * b1 / (4.0 * b0), 0.0), 1));
        let re = -16.0 * b0 * nf * nf * PI * PI;
        let im = 4.0 * b1 * nf * PI;
        out.push((C::new(re, -im), 1));
        out.push((C::new(re, im), 1));
    }
    out.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    Ok(out)
}

/// Smallest positive real part among the nonzero `de` eigenvalues.
pub fn de_gap(spec: DeSpec) -> f64 {
    let (b0, b1) = (spec.b0, spec.b1);
    if b1.abs() <= -4.0 * 3f64.sqrt() * b0 * PI {
        -4.0 * b0 * PI * PI - b1 * b1 / (4.0 * b0)
    } else {
        -16.0 * b0 * PI * PI
    }
}

/// The transformed determinant in the variable `u = -λ/b0 - q`:
/// `-2A² (sin(√u/2)/√u) ((A²+1)/(2A) - cos(√u/2))` with `A = exp(-b1/(4b0))`.
pub fn de_delta_tilde(spec: DeSpec, u: C) -> C {
    let beta = -spec.b1 / (4.0 * spec.b0);
    let a = beta.exp();
    let ib = C::new(0.0, beta);
    let (sinc_half, w) = if u.norm() < 1e-6 {
        ((C::new(1.0, 0.0) - u / 24.0 + u * u / 1920.0) * 0.5, u.sqrt() / 2.0)
    } else {
        let s = u.sqrt();
        ((s / 2.0).sin() / s, s / 2.0)
    };
    // (A² + 1)/(2A) - cos w = cos(iβ) - cos w, written as a product of sines.
    let bracket = -((ib + w) / 2.0).sin() * ((ib - w) / 2.0).sin() * 2.0;
    -sinc_half * bracket * (2.0 * a * a)
}
