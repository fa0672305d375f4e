//! Characteristic matrix and determinant Δ(λ).
//!
//! λ is an eigenvalue iff `Δ(λ) = det m(λ) = 0` where
//!
//! ```text
//! m = [ ∫y1 dν0 − 1        ∫y2 dν0        ]
//!     [ ∫y1 dν1 − y1(1)    ∫y2 dν1 − y2(1) ]
//! ```
//!
//! Writing `μ0 = ν0 − δ0`, `μ1 = ν1 − δ1`, the determinant equals the double
//! integral `∬ K(s,t) dμ0(s) dμ1(t)` with `K(s,t) = y1(s) y2(t) − y2(s) y1(t)`.
//! For `s < t`, `K(s,t) = W(s) Φ12(t,s)` where `Φ(t,s)` is the transfer matrix
//! of the equation from `s` to `t`. [`delta`] evaluates this form: it never
//! subtracts products of exponentially large solution values, so Δ keeps its
//! relative accuracy far from the real axis where `det m` cancels badly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ode::{integrate_basis, layout_transfers, Backend, FundamentalBasis, ToleranceSettings};
use crate::problem::{BoundaryMeasure, Problem};
use crate::region::ContourRegion;

type C = Complex64;
type M2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);

/// Which solution component a measure moment integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MomentSelector {
    Y1,
    Y2,
    DlY1,
    DlY2,
}

/// `∫ f dν` for the selected component `f` of the basis.
pub fn measure_moment(basis: &FundamentalBasis, measure: &BoundaryMeasure, which: MomentSelector) -> C {
    measure.integrate(|x| {
        let p = basis.eval(x).expect("quadrature nodes lie in [0, 1]");
        match which {
            MomentSelector::Y1 => p.y1,
            MomentSelector::Y2 => p.y2,
            MomentSelector::DlY1 => p.dl_y1,
            MomentSelector::DlY2 => p.dl_y2,
        }
    })
}

/// The characteristic matrix at λ together with its elementwise λ-derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharMatrix {
    pub lambda: C,
    pub m: M2,
    pub m_prime: M2,
}

impl CharMatrix {
    /// Direct determinant of `m` (loses accuracy when `|Im √λ|` is large).
    pub fn det(&self) -> C {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Product-rule derivative of [`CharMatrix::det`].
    pub fn det_prime(&self) -> C {
        let (m, d) = (&self.m, &self.m_prime);
        d[0][0] * m[1][1] + m[0][0] * d[1][1] - d[0][1] * m[1][0] - m[0][1] * d[1][0]
    }
}

/// Assembles the characteristic matrix from one basis integration.
pub fn char_matrix(problem: &Problem, lambda: C, tol: ToleranceSettings) -> Result<CharMatrix> {
    let basis = integrate_basis(problem, lambda, tol)?;
    Ok(char_matrix_from_basis(problem, &basis))
}

pub(crate) fn char_matrix_from_basis(problem: &Problem, basis: &FundamentalBasis) -> CharMatrix {
    use MomentSelector::*;
    let end = basis.eval(1.0).expect("x = 1 is in range");
    let mo = |nu: &BoundaryMeasure, s| measure_moment(basis, nu, s);
    let (nu0, nu1) = (problem.nu0(), problem.nu1());
    let m = [
        [mo(nu0, Y1) - 1.0, mo(nu0, Y2)],
        [mo(nu1, Y1) - end.y1, mo(nu1, Y2) - end.y2],
    ];
    let m_prime = [
        [mo(nu0, DlY1), mo(nu0, DlY2)],
        [mo(nu1, DlY1) - end.dl_y1, mo(nu1, DlY2) - end.dl_y2],
    ];
    CharMatrix {
        lambda: basis.lambda(),
        m,
        m_prime,
    }
}

/// Δ(λ).
pub fn delta(problem: &Problem, lambda: C, tol: ToleranceSettings) -> Result<C> {
    Ok(delta_with_prime(problem, lambda, tol)?.0)
}

/// `(Δ(λ), Δ'(λ))`, the derivative coming from the variational system.
///
/// Constant-coefficient problems use the exact closed-form transfer maps;
/// see [`delta_with_prime_using`] to force integration.
pub fn delta_with_prime(problem: &Problem, lambda: C, tol: ToleranceSettings) -> Result<(C, C)> {
    delta_with_prime_using(problem, lambda, tol, Backend::Auto)
}

/// [`delta_with_prime`] with an explicit choice of transfer-map backend.
pub fn delta_with_prime_using(
    problem: &Problem,
    lambda: C,
    tol: ToleranceSettings,
    backend: Backend,
) -> Result<(C, C)> {
    problem.ensure_valid()?;
    delta_unchecked(problem, lambda, tol, backend)
}

fn mul(a: &M2, b: &M2) -> M2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn add(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

/// Δ and Δ' for a problem already known to be valid.
pub(crate) fn delta_unchecked(
    problem: &Problem,
    lambda: C,
    tol: ToleranceSettings,
    backend: Backend,
) -> Result<(C, C)> {
    let layout = problem.layout();
    let locals = layout_transfers(problem, lambda, tol, backend)?;
    let n = layout.knots.len();
    let mut w0 = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    for &(k, w) in &layout.nu0 {
        w0[k] += w;
    }
    for &(k, w) in &layout.nu1 {
        w1[k] += w;
    }
    w0[0] -= 1.0;
    w1[n - 1] -= 1.0;
    let support: Vec<usize> = (0..n).filter(|&k| w0[k] != 0.0 || w1[k] != 0.0).collect();
    let last = *support.last().expect("μ1 always charges x = 1");
    let transfers: Vec<(M2, M2)> = locals
        .iter()
        .map(|l| ([[l[0], l[2]], [l[1], l[3]]], [[l[4], l[6]], [l[5], l[7]]]))
        .collect();

    let mut d = ZERO;
    let mut dp = ZERO;
    for &s in &support {
        let one = C::new(1.0, 0.0);
        let mut p: M2 = [[one, ZERO], [ZERO, one]];
        let mut dpm: M2 = [[ZERO; 2]; 2];
        let ws = layout.wronskian[s];
        for t in s + 1..=last {
            let (tm, dtm) = &transfers[t - 1];
            dpm = add(&mul(dtm, &p), &mul(tm, &dpm));
            p = mul(tm, &p);
            let c = w0[s] * w1[t] - w1[s] * w0[t];
            if c != 0.0 {
                d += p[0][1] * (c * ws);
                dp += dpm[0][1] * (c * ws);
            }
        }
    }
    Ok((d, dp))
}

/// Δ sampled on a regular grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSample {
    pub region: ContourRegion,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: row `j` holds the samples with imaginary part index `j`.
    pub values: Vec<C>,
}

impl GridSample {
    /// λ at grid position `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> C {
        grid_point(&self.region, self.nx, self.ny, i, j)
    }

    pub fn value(&self, i: usize, j: usize) -> C {
        self.values[j * self.nx + i]
    }
}

fn grid_point(r: &ContourRegion, nx: usize, ny: usize, i: usize, j: usize) -> C {
    let fx = i as f64 / (nx - 1) as f64;
    let fy = j as f64 / (ny - 1) as f64;
    C::new(
        r.re_min + fx * (r.re_max - r.re_min),
        r.im_min + fy * (r.im_max - r.im_min),
    )
}

/// Samples Δ on an `nx × ny` grid spanning the region, in parallel.
pub fn delta_grid(
    problem: &Problem,
    region: &ContourRegion,
    nx: usize,
    ny: usize,
    tol: ToleranceSettings,
) -> Result<GridSample> {
    if nx < 2 || ny < 2 {
        return Err(Error::Domain(format!("grid dimensions {nx}x{ny} must be at least 2x2")));
    }
    region.check()?;
    problem.ensure_valid()?;
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let lam = grid_point(region, nx, ny, idx % nx, idx / nx);
            delta_unchecked(problem, lam, tol, Backend::Auto).map(|v| v.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSample {
        region: *region,
        nx,
        ny,
        values,
    })
}
