//! Fundamental system of `b0 y'' + b1 y' = λ y` for complex λ.
//!
//! The eight tracked components are `y1, y1', y2, y2'` and their λ-derivatives.
//! The λ-derivatives come from the variational equation
//! `b0 z'' + b1 z' = λ z + y` with zero initial data.
//!
//! Integration is an embedded Dormand–Prince 5(4) pair with the standard
//! continuous extension. The interval is cut at knots (coefficient
//! breakpoints and measure nodes); on every knot interval the *local*
//! fundamental system is integrated from identity data, and global values
//! are recovered by composing these transfer maps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{horner, Problem};

type C = Complex64;

/// Packed component order: `y1, y1', y2, y2', ∂λy1, ∂λy1', ∂λy2, ∂λy2'`.
pub(crate) type State = [C; 8];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const IDENTITY: State = [ONE, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, ZERO];

const MIN_STEP: f64 = 1e-14;
const MAX_STEPS: usize = 500_000;

/// Error tolerances of the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceSettings {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        ToleranceSettings {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

impl ToleranceSettings {
    pub fn new(rtol: f64, atol: f64) -> Self {
        ToleranceSettings { rtol, atol }
    }

    /// Both tolerances multiplied by `factor`, floored near machine precision.
    pub fn scaled(self, factor: f64) -> Self {
        ToleranceSettings {
            rtol: (self.rtol * factor).max(2e-14),
            atol: (self.atol * factor).max(1e-300),
        }
    }
}

/// The eight fundamental-system components at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisPoint {
    pub y1: C,
    pub y1p: C,
    pub y2: C,
    pub y2p: C,
    pub dl_y1: C,
    pub dl_y1p: C,
    pub dl_y2: C,
    pub dl_y2p: C,
}

impl BasisPoint {
    fn from_state(s: &State) -> Self {
        BasisPoint {
            y1: s[0],
            y1p: s[1],
            y2: s[2],
            y2p: s[3],
            dl_y1: s[4],
            dl_y1p: s[5],
            dl_y2: s[6],
            dl_y2p: s[7],
        }
    }

    pub fn to_array(&self) -> [C; 8] {
        [
            self.y1,
            self.y1p,
            self.y2,
            self.y2p,
            self.dl_y1,
            self.dl_y1p,
            self.dl_y2,
            self.dl_y2p,
        ]
    }

    /// `y1 y2' - y1' y2`.
    pub fn wronskian(&self) -> C {
        self.y1 * self.y2p - self.y1p * self.y2
    }
}

/// Step counts of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejections: usize,
}

#[derive(Clone, Debug)]
struct DenseStep {
    x0: f64,
    h: f64,
    cont: [State; 5],
}

impl DenseStep {
    fn eval(&self, x: f64) -> State {
        let s = ((x - self.x0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.cont;
        std::array::from_fn(|i| r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * s1) * s) * s1) * s)
    }
}

/// Dense-output record of the fundamental system at a fixed λ.
#[derive(Clone, Debug)]
pub struct FundamentalBasis {
    lambda: C,
    knots: Vec<f64>,
    /// Global state at every knot.
    at_knots: Vec<State>,
    /// Local dense output of each knot interval, relative to its left knot.
    dense: Vec<Vec<DenseStep>>,
    stats: IntegratorStats,
}

impl FundamentalBasis {
    pub fn lambda(&self) -> C {
        self.lambda
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    /// Knots at which integration restarted.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Every accepted step endpoint in increasing order.
    pub fn step_mesh(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for seg in &self.dense {
            out.extend(seg.iter().map(|s| s.x0 + s.h));
        }
        out
    }

    /// Dense-output evaluation of all eight components at `x`.
    pub fn eval(&self, x: f64) -> Result<BasisPoint> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(BasisPoint::from_state(&self.state_at(x)))
    }

    pub(crate) fn state_at(&self, x: f64) -> State {
        let k = self.knots.partition_point(|&t| t <= x);
        if k == 0 {
            return self.at_knots[0];
        }
        let seg = k - 1;
        if seg >= self.dense.len() || x == self.knots[seg] {
            return self.at_knots[seg.min(self.at_knots.len() - 1)];
        }
        let steps = &self.dense[seg];
        let j = steps.partition_point(|s| s.x0 + s.h < x).min(steps.len() - 1);
        compose(&steps[j].eval(x), &self.at_knots[seg])
    }

    /// Global state at knot `k`.
    #[cfg(test)]
    fn knot_state(&self, k: usize) -> &State {
        &self.at_knots[k]
    }
}

/// Evaluates a [`FundamentalBasis`] at `x`.
pub fn eval_basis(basis: &FundamentalBasis, x: f64) -> Result<BasisPoint> {
    basis.eval(x)
}

/// Applies a local transfer (identity data at the left knot) to a global state.
pub(crate) fn compose(local: &State, start: &State) -> State {
    let [p1, p1d, p2, p2d, q1, q1d, q2, q2d] = *local;
    let mut out = [ZERO; 8];
    for j in 0..2 {
        let (y, yd) = (start[2 * j], start[2 * j + 1]);
        let (z, zd) = (start[4 + 2 * j], start[5 + 2 * j]);
        out[2 * j] = p1 * y + p2 * yd;
        out[2 * j + 1] = p1d * y + p2d * yd;
        out[4 + 2 * j] = q1 * y + q2 * yd + p1 * z + p2 * zd;
        out[5 + 2 * j] = q1d * y + q2d * yd + p1d * z + p2d * zd;
    }
    out
}

#[inline]
fn rhs(x: f64, u: &State, lambda: C, p0: &[f64; 4], p1: &[f64; 4]) -> State {
    let inv_b0 = 1.0 / horner(p0, x);
    let b1 = horner(p1, x);
    let acc = |y: C, yd: C, src: C| (lambda * y + src - yd * b1) * inv_b0;
    [
        u[1],
        acc(u[0], u[1], ZERO),
        u[3],
        acc(u[2], u[3], ZERO),
        u[5],
        acc(u[4], u[5], u[0]),
        u[7],
        acc(u[6], u[7], u[2]),
    ]
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn lin(base: &State, terms: &[(f64, &State)]) -> State {
    std::array::from_fn(|i| {
        let mut acc = base[i];
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        acc
    })
}

/// Integrates the local fundamental system across one knot interval.
#[allow(clippy::too_many_arguments)]
fn integrate_interval(
    lo: f64,
    hi: f64,
    p0: &[f64; 4],
    p1: &[f64; 4],
    lambda: C,
    tol: ToleranceSettings,
    h_guess: &mut f64,
    mut dense: Option<&mut Vec<DenseStep>>,
    stats: &mut IntegratorStats,
) -> Result<State> {
    let mut x = lo;
    let mut y = IDENTITY;
    let mut k1 = rhs(x, &y, lambda, p0, p1);
    let mut h = h_guess.min(hi - lo);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut count = 0usize;
    loop {
        if x >= hi {
            break;
        }
        if h < MIN_STEP {
            return Err(Error::StepUnderflow { x, lambda });
        }
        count += 1;
        if count > MAX_STEPS {
            return Err(Error::TooManySteps { x, lambda });
        }
        let last = x + h >= hi - 1e-15 * hi.abs().max(1.0);
        if last {
            h = hi - x;
        }
        let k2 = rhs(x + 0.2 * h, &lin(&y, &[(h * A21, &k1)]), lambda, p0, p1);
        let k3 = rhs(x + 0.3 * h, &lin(&y, &[(h * A31, &k1), (h * A32, &k2)]), lambda, p0, p1);
        let k4 = rhs(
            x + 0.8 * h,
            &lin(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]),
            lambda,
            p0,
            p1,
        );
        let k5 = rhs(
            x + 8.0 / 9.0 * h,
            &lin(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
            lambda,
            p0,
            p1,
        );
        let xph = if last { hi } else { x + h };
        let k6 = rhs(
            xph,
            &lin(
                &y,
                &[
                    (h * A61, &k1),
                    (h * A62, &k2),
                    (h * A63, &k3),
                    (h * A64, &k4),
                    (h * A65, &k5),
                ],
            ),
            lambda,
            p0,
            p1,
        );
        let y_new = lin(
            &y,
            &[
                (h * A71, &k1),
                (h * A73, &k3),
                (h * A74, &k4),
                (h * A75, &k5),
                (h * A76, &k6),
            ],
        );
        let k7 = rhs(xph, &y_new, lambda, p0, p1);
        let mut err = 0.0;
        for i in 0..8 {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sk = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err += (e.norm() / sk).powi(2);
        }
        let err = (err / 8.0).sqrt();
        // Hairer's PI controller
        const BETA: f64 = 0.04;
        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 && err.is_finite() {
            let fac = (fac11 / facold.powf(BETA) / 0.9).clamp(0.1, 5.0);
            facold = err.max(1e-4);
            stats.steps += 1;
            if let Some(d) = dense.as_deref_mut() {
                let cont4: State = std::array::from_fn(|i| {
                    (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h
                });
                let ydiff: State = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: State = std::array::from_fn(|i| k1[i] * h - ydiff[i]);
                let cont3: State = std::array::from_fn(|i| ydiff[i] - k7[i] * h - bspl[i]);
                d.push(DenseStep {
                    x0: x,
                    h,
                    cont: [y, ydiff, bspl, cont3, cont4],
                });
            }
            x = xph;
            y = y_new;
            k1 = k7;
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            if !last {
                *h_guess = h_new;
            }
            h = h_new;
        } else {
            stats.rejections += 1;
            let shrink = if err.is_finite() { (fac11 / 0.9).min(5.0) } else { 10.0 };
            h /= shrink;
            last_rejected = true;
        }
    }
    Ok(y)
}

fn initial_step(problem_rate: f64, tol: ToleranceSettings) -> f64 {
    2.0 * tol.rtol.powf(0.2) / (1.0 + problem_rate)
}

fn rate(lambda: C, p0: &[f64; 4], p1: &[f64; 4], x: f64) -> f64 {
    let b0 = horner(p0, x).abs();
    (lambda.norm() / b0).sqrt() + horner(p1, x).abs() / b0
}

struct Run {
    locals: Vec<State>,
    dense: Vec<Vec<DenseStep>>,
    stats: IntegratorStats,
}

fn run_knots(
    knots: &[f64],
    pieces: &[([f64; 4], [f64; 4])],
    lambda: C,
    tol: ToleranceSettings,
    keep_dense: bool,
) -> Result<Run> {
    let mut stats = IntegratorStats::default();
    let mut locals = Vec::with_capacity(pieces.len());
    let mut dense = Vec::new();
    let mut h = f64::INFINITY;
    for (w, (p0, p1)) in knots.windows(2).zip(pieces) {
        h = h.min(initial_step(rate(lambda, p0, p1, w[0]), tol));
        let mut steps = Vec::new();
        let local = integrate_interval(
            w[0],
            w[1],
            p0,
            p1,
            lambda,
            tol,
            &mut h,
            keep_dense.then_some(&mut steps),
            &mut stats,
        )?;
        locals.push(local);
        if keep_dense {
            dense.push(steps);
        }
    }
    Ok(Run { locals, dense, stats })
}

/// Source of the local transfer maps behind Δ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    /// Closed form for constant coefficients, the integrator otherwise.
    #[default]
    Auto,
    /// Always integrate, even when a closed form exists.
    Integrator,
}

/// Local transfer maps over every layout knot interval (no dense output).
pub(crate) fn layout_transfers(
    problem: &Problem,
    lambda: C,
    tol: ToleranceSettings,
    backend: Backend,
) -> Result<Vec<State>> {
    let layout = problem.layout();
    if let (Backend::Auto, Some((b0, b1))) = (backend, problem.constant_coefficients()) {
        // The equation is autonomous, so each local map is the closed form at the interval length.
        return layout
            .knots
            .windows(2)
            .map(|w| closed_form_basis(b0, b1, lambda, w[1] - w[0]).map(|p| p.to_array()))
            .collect();
    }
    Ok(run_knots(&layout.knots, &layout.pieces, lambda, tol, false)?.locals)
}

/// Integrates the fundamental system with dense output over [0, 1].
pub fn integrate_basis(problem: &Problem, lambda: C, tol: ToleranceSettings) -> Result<FundamentalBasis> {
    integrate_basis_with_knots(problem, lambda, &[], tol)
}

/// Like [`integrate_basis`], additionally restarting at every point of `extra`
/// so that values there are exact step endpoints.
pub fn integrate_basis_with_knots(
    problem: &Problem,
    lambda: C,
    extra: &[f64],
    tol: ToleranceSettings,
) -> Result<FundamentalBasis> {
    problem.ensure_valid()?;
    let layout = problem.layout();
    let (knots, pieces) = if extra.is_empty() {
        (layout.knots.clone(), layout.pieces.clone())
    } else {
        let mut pts: Vec<f64> = layout
            .knots
            .iter()
            .chain(extra)
            .copied()
            .filter(|p| (0.0..=1.0).contains(p))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        if let Some(last) = pts.last_mut() {
            *last = 1.0;
        }
        let pieces = pts
            .windows(2)
            .map(|w| (problem.b0().piece_at(w[0], w[1]), problem.b1().piece_at(w[0], w[1])))
            .collect();
        (pts, pieces)
    };
    let run = run_knots(&knots, &pieces, lambda, tol, true)?;
    let mut at_knots = Vec::with_capacity(knots.len());
    at_knots.push(IDENTITY);
    for local in &run.locals {
        let next = compose(local, at_knots.last().expect("non-empty"));
        at_knots.push(next);
    }
    Ok(FundamentalBasis {
        lambda,
        knots,
        at_knots,
        dense: run.dense,
        stats: run.stats,
    })
}

/// `cos(√z x)`, `sin(√z x)/√z` and their z-derivatives.
fn trig_pair(z: C, x: f64) -> (C, C, C, C) {
    if z.norm() < 1e-6 {
        let w = z * x * x;
        let mut c = ZERO;
        let mut s = ZERO;
        let mut sz = ZERO;
        let mut pow = ONE; // (-w)^k
        let mut fact_even = 1.0; // (2k)!
        for k in 0..12usize {
            let fact_odd = fact_even * (2 * k + 1) as f64; // (2k+1)!
            c += pow / fact_even;
            s += pow / fact_odd;
            if k + 1 < 12 {
                // term k+1 of d/dz: (k+1)(-1)^{k+1} w^k / (2k+3)!
                let next_odd = fact_odd * (2 * k + 2) as f64 * (2 * k + 3) as f64;
                sz += -pow * ((k + 1) as f64) / next_odd;
            }
            pow *= -w;
            fact_even = fact_odd * (2 * k + 2) as f64;
        }
        let s = s * x;
        let sz = sz * x.powi(3);
        (c, s, -s * x * 0.5, sz)
    } else {
        let r = z.sqrt();
        let c = (r * x).cos();
        let s = (r * x).sin() / r;
        (c, s, -s * x * 0.5, (c * x - s) / (z * 2.0))
    }
}

/// Exact fundamental system for constant coefficients.
///
/// Uses `v = exp(b1 x / 2 b0) y`, which turns the equation into
/// `-v'' + q v = (-λ/b0) v` with `q = (b1/2b0)^2`.
pub fn closed_form_basis(b0: f64, b1: f64, lambda: C, x: f64) -> Result<BasisPoint> {
    if !(b0 < 0.0) {
        return Err(Error::Domain(format!("b0 = {b0} must be negative")));
    }
    let c = b1 / (2.0 * b0);
    let kappa = -c;
    let z = -lambda / b0 - c * c;
    let g = -1.0 / b0;
    let e = (kappa * x).exp();
    let (cc, s, cz, sz) = trig_pair(z, x);
    let cx = -z * s;
    let czx = -s - z * sz;
    let v1 = cc + s * c;
    let v1x = cx + cc * c;
    let v1z = cz + sz * c;
    let v1zx = czx + cz * c;
    Ok(BasisPoint {
        y1: v1 * e,
        y1p: (v1 * kappa + v1x) * e,
        y2: s * e,
        y2p: (s * kappa + cc) * e,
        dl_y1: v1z * e * g,
        dl_y1p: (v1z * kappa + v1zx) * e * g,
        dl_y2: sz * e * g,
        dl_y2p: (sz * kappa + cz) * e * g,
    })
}
