//! Operator data: coefficients `b0`, `b1` of `b0 y'' + b1 y'` on (0, 1) and the
//! two boundary probability measures that define the jump conditions
//! `y(0) = ∫ y dν0`, `y(1) = ∫ y dν1`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre_7, integrate_real};

/// Default lower bound on `-b0`.
pub const DEFAULT_B0_FLOOR: f64 = 1e-8;

const MASS_TOL: f64 = 1e-12;
const MESH_MERGE: f64 = 1e-14;

/// A real coefficient on [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// Polynomials of degree ≤ 3 in the absolute coordinate, coefficients in
    /// ascending degree, one per breakpoint interval.
    Piecewise {
        breakpoints: Vec<f64>,
        polys: Vec<Vec<f64>>,
    },
}

/// Horner evaluation with ascending coefficients.
pub(crate) fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Constant(value)
    }

    pub fn piecewise(breakpoints: Vec<f64>, polys: Vec<Vec<f64>>) -> Self {
        Coefficient::Piecewise { breakpoints, polys }
    }

    pub fn breakpoints(&self) -> &[f64] {
        match self {
            Coefficient::Constant(_) => &[],
            Coefficient::Piecewise { breakpoints, .. } => breakpoints,
        }
    }

    /// Padded cubic coefficients of the piece covering `[lo, hi]`.
    ///
    /// `lo` must be a left end such that the open interval does not straddle
    /// a breakpoint; the piece containing the midpoint is used.
    pub(crate) fn piece_at(&self, lo: f64, hi: f64) -> [f64; 4] {
        match self {
            Coefficient::Constant(v) => [*v, 0.0, 0.0, 0.0],
            Coefficient::Piecewise { breakpoints, polys } => {
                let mid = 0.5 * (lo + hi);
                let idx = piece_index(breakpoints, mid);
                let mut out = [0.0; 4];
                for (o, c) in out.iter_mut().zip(&polys[idx]) {
                    *o = *c;
                }
                out
            }
        }
    }

    /// Value at `x`, using the right-hand piece at interior breakpoints.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        Ok(match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Piecewise { breakpoints, polys } => horner(&polys[piece_index(breakpoints, x)], x),
        })
    }

    /// `sign * c(1 - s)` as a coefficient in `s`.
    pub(crate) fn reflected(&self, sign: f64) -> Coefficient {
        match self {
            Coefficient::Constant(v) => Coefficient::Constant(sign * v),
            Coefficient::Piecewise { breakpoints, polys } => Coefficient::Piecewise {
                breakpoints: breakpoints.iter().rev().map(|b| 1.0 - b).collect(),
                polys: polys
                    .iter()
                    .rev()
                    .map(|p| {
                        // Σ a_k (1 - s)^k expanded in powers of s.
                        let mut out = vec![0.0; p.len()];
                        for (k, &a) in p.iter().enumerate() {
                            let mut binom = 1.0;
                            for (j, o) in out.iter_mut().enumerate().take(k + 1) {
                                *o += sign * a * binom * if j % 2 == 0 { 1.0 } else { -1.0 };
                                binom = binom * (k - j) as f64 / (j + 1) as f64;
                            }
                        }
                        out
                    })
                    .collect(),
            },
        }
    }

    fn is_constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(v) => Some(*v),
            Coefficient::Piecewise { .. } => None,
        }
    }

    fn check_shape(&self, field: &str, out: &mut Vec<Violation>) -> bool {
        match self {
            Coefficient::Constant(v) => {
                if !v.is_finite() {
                    out.push(Violation::new(field, "value must be finite"));
                    return false;
                }
                true
            }
            Coefficient::Piecewise { breakpoints, polys } => {
                let mut ok = check_mesh(field, breakpoints, out);
                if ok && polys.len() + 1 != breakpoints.len() {
                    out.push(Violation::new(
                        field,
                        format!("{} polynomials for {} intervals", polys.len(), breakpoints.len() - 1),
                    ));
                    ok = false;
                }
                for (i, p) in polys.iter().enumerate() {
                    if p.is_empty() || p.len() > 4 {
                        out.push(Violation::new(
                            field,
                            format!("piece {i} must have 1 to 4 coefficients (degree ≤ 3)"),
                        ));
                        ok = false;
                    }
                    if p.iter().any(|c| !c.is_finite()) {
                        out.push(Violation::new(field, format!("piece {i} has non-finite coefficients")));
                        ok = false;
                    }
                }
                ok
            }
        }
    }

    /// Maximum over [0, 1]; assumes a well-formed coefficient.
    fn max_value(&self) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Piecewise { breakpoints, polys } => breakpoints
                .windows(2)
                .zip(polys)
                .map(|(w, p)| cubic_max(p, w[0], w[1]))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn piece_index(breakpoints: &[f64], x: f64) -> usize {
    let n = breakpoints.len() - 1;
    // last breakpoint <= x, clamped to the final interval
    let pos = breakpoints.partition_point(|&b| b <= x);
    pos.saturating_sub(1).min(n - 1)
}

fn cubic_max(p: &[f64], lo: f64, hi: f64) -> f64 {
    let mut best = horner(p, lo).max(horner(p, hi));
    // stationary points of the derivative 3 c3 x^2 + 2 c2 x + c1
    let c = |i: usize| p.get(i).copied().unwrap_or(0.0);
    let (a, b, cc) = (3.0 * c(3), 2.0 * c(2), c(1));
    let mut crit = Vec::new();
    if a.abs() > 0.0 {
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            crit.push((-b + s) / (2.0 * a));
            crit.push((-b - s) / (2.0 * a));
        }
    } else if b.abs() > 0.0 {
        crit.push(-cc / b);
    }
    for x in crit {
        if x > lo && x < hi {
            best = best.max(horner(p, x));
        }
    }
    best
}

fn check_mesh(field: &str, mesh: &[f64], out: &mut Vec<Violation>) -> bool {
    if mesh.len() < 2 {
        out.push(Violation::new(field, "breakpoints need at least two entries"));
        return false;
    }
    let mut ok = true;
    if mesh[0] != 0.0 || mesh[mesh.len() - 1] != 1.0 {
        out.push(Violation::new(field, "breakpoints must start at 0 and end at 1"));
        ok = false;
    }
    if mesh.windows(2).any(|w| !(w[0] < w[1])) {
        out.push(Violation::new(field, "breakpoints must be strictly increasing"));
        ok = false;
    }
    ok
}

/// A point mass of a boundary measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// Piecewise-constant density on a breakpoint mesh of [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

/// Probability measure on (0, 1): atoms plus an optional piecewise-constant density.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BoundaryMeasure {
    pub atoms: Vec<Atom>,
    pub density: Option<Density>,
}

impl BoundaryMeasure {
    /// Dirac measure at `x`.
    pub fn dirac(x: f64) -> Self {
        BoundaryMeasure {
            atoms: vec![Atom { x, w: 1.0 }],
            density: None,
        }
    }

    /// Uniform density on [0, 1].
    pub fn uniform() -> Self {
        BoundaryMeasure {
            atoms: Vec::new(),
            density: Some(Density {
                breakpoints: vec![0.0, 1.0],
                values: vec![1.0],
            }),
        }
    }

    pub fn mass(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.w).sum();
        let dens: f64 = self
            .density
            .as_ref()
            .map(|d| {
                d.breakpoints
                    .windows(2)
                    .zip(&d.values)
                    .map(|(w, v)| v * (w[1] - w[0]))
                    .sum()
            })
            .unwrap_or(0.0);
        atoms + dens
    }

    /// The image of the measure under `x ↦ 1 - x`.
    pub(crate) fn reflected(&self) -> Self {
        BoundaryMeasure {
            atoms: self.atoms.iter().map(|a| Atom { x: 1.0 - a.x, w: a.w }).collect(),
            density: self.density.as_ref().map(|d| Density {
                breakpoints: d.breakpoints.iter().rev().map(|b| 1.0 - b).collect(),
                values: d.values.iter().rev().copied().collect(),
            }),
        }
    }

    /// Quadrature representation `(x, weight)`: the atoms, then 7 Gauss–Legendre
    /// nodes on every density interval with positive value.
    pub fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.atoms.iter().map(|a| (a.x, a.w)).collect();
        if let Some(d) = &self.density {
            for (w, &v) in d.breakpoints.windows(2).zip(&d.values) {
                if v > 0.0 {
                    out.extend(gauss_legendre_7(w[0], w[1]).iter().map(|&(x, q)| (x, q * v)));
                }
            }
        }
        out
    }

    /// Integrates `f` against the measure.
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        self.quadrature_nodes().into_iter().map(|(x, w)| f(x) * w).sum()
    }

    fn validate_into(&self, field: &str, out: &mut Vec<Violation>) {
        let before = out.len();
        for (i, a) in self.atoms.iter().enumerate() {
            if !(a.x > 0.0 && a.x < 1.0) {
                out.push(Violation::new(
                    field,
                    format!("atom {i} at x = {} must lie strictly inside (0, 1)", a.x),
                ));
            }
            if !(a.w > 0.0) || !a.w.is_finite() {
                out.push(Violation::new(
                    field,
                    format!("atom {i} weight {} must be positive", a.w),
                ));
            }
        }
        let mut xs: Vec<f64> = self.atoms.iter().map(|a| a.x).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).any(|w| w[0] == w[1]) {
            out.push(Violation::new(field, "atom locations must be pairwise distinct"));
        }
        if let Some(d) = &self.density {
            let name = format!("{field}.density");
            if check_mesh(&name, &d.breakpoints, out) && d.values.len() + 1 != d.breakpoints.len() {
                out.push(Violation::new(
                    &name,
                    format!("{} values for {} intervals", d.values.len(), d.breakpoints.len() - 1),
                ));
            }
            if d.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                out.push(Violation::new(&name, "density values must be nonnegative"));
            }
        }
        if out.len() == before {
            let m = self.mass();
            if (m - 1.0).abs() > MASS_TOL {
                out.push(Violation::new(field, format!("measure mass {m} ≠ 1")));
            }
        }
    }
}

/// One violated invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Result of [`Problem::validate`]; empty iff the problem is valid.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// The full operator description.
///
/// Immutable once built; the integration layout is computed lazily and cached.
#[derive(Clone, Debug)]
pub struct Problem {
    b0: Coefficient,
    b1: Coefficient,
    nu0: BoundaryMeasure,
    nu1: BoundaryMeasure,
    b0_floor: f64,
    layout: OnceLock<Layout>,
}

impl PartialEq for Problem {
    fn eq(&self, other: &Self) -> bool {
        self.b0 == other.b0
            && self.b1 == other.b1
            && self.nu0 == other.nu0
            && self.nu1 == other.nu1
            && self.b0_floor == other.b0_floor
    }
}

impl Problem {
    pub fn new(b0: Coefficient, b1: Coefficient, nu0: BoundaryMeasure, nu1: BoundaryMeasure) -> Self {
        Problem {
            b0,
            b1,
            nu0,
            nu1,
            b0_floor: DEFAULT_B0_FLOOR,
            layout: OnceLock::new(),
        }
    }

    /// Constant coefficients with `ν0 = ν1 = δ_a`.
    pub fn constant_with_dirac(b0: f64, b1: f64, a: f64) -> Self {
        Self::new(
            Coefficient::Constant(b0),
            Coefficient::Constant(b1),
            BoundaryMeasure::dirac(a),
            BoundaryMeasure::dirac(a),
        )
    }

    /// The same problem in the coordinate `s = 1 - x`: `y(x) = z(1 - x)` solves
    /// the original equation exactly when `z` solves the reflected one, and
    /// the two boundary conditions trade places.
    pub fn reflected(&self) -> Problem {
        Problem::new(
            self.b0.reflected(1.0),
            self.b1.reflected(-1.0),
            self.nu1.reflected(),
            self.nu0.reflected(),
        )
        .with_b0_floor(self.b0_floor)
    }

    pub fn with_b0_floor(mut self, floor: f64) -> Self {
        self.b0_floor = floor;
        self.layout = OnceLock::new();
        self
    }

    pub fn b0(&self) -> &Coefficient {
        &self.b0
    }
    pub fn b1(&self) -> &Coefficient {
        &self.b1
    }
    pub fn nu0(&self) -> &BoundaryMeasure {
        &self.nu0
    }
    pub fn nu1(&self) -> &BoundaryMeasure {
        &self.nu1
    }
    pub fn b0_floor(&self) -> f64 {
        self.b0_floor
    }

    /// `(b0, b1)` when both coefficients are constants.
    pub fn constant_coefficients(&self) -> Option<(f64, f64)> {
        Some((self.b0.is_constant()?, self.b1.is_constant()?))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let b0_ok = self.b0.check_shape("b0", &mut v);
        self.b1.check_shape("b1", &mut v);
        if b0_ok {
            let m = self.b0.max_value();
            if m > -self.b0_floor {
                v.push(Violation::new(
                    "b0",
                    format!("b0 must be ≤ −ε0 = {:e} (max value {m})", -self.b0_floor),
                ));
            }
        }
        self.nu0.validate_into("nu0", &mut v);
        self.nu1.validate_into("nu1", &mut v);
        ValidationReport { violations: v }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let r = self.validate();
        if r.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(r))
        }
    }

    /// Merged breakpoints of `b0`, `b1` and both densities, always containing 0 and 1.
    pub fn master_mesh(&self) -> Vec<f64> {
        let mut pts = vec![0.0, 1.0];
        pts.extend_from_slice(self.b0.breakpoints());
        pts.extend_from_slice(self.b1.breakpoints());
        for nu in [&self.nu0, &self.nu1] {
            if let Some(d) = &nu.density {
                pts.extend_from_slice(&d.breakpoints);
            }
        }
        merge_points(pts)
    }

    /// `∫_a^b b1/b0 dt` by piecewise adaptive quadrature.
    pub(crate) fn drift_integral(&self, a: f64, b: f64) -> f64 {
        if let Some((b0, b1)) = self.constant_coefficients() {
            return b1 / b0 * (b - a);
        }
        let mesh = self.master_mesh();
        let mut lo = a;
        let mut total = 0.0;
        for &bp in mesh.iter().filter(|&&p| p > a && p < b).chain(std::iter::once(&b)) {
            let p0 = self.b0.piece_at(lo, bp);
            let p1 = self.b1.piece_at(lo, bp);
            total += integrate_real(|t| horner(&p1, t) / horner(&p0, t), lo, bp, 1e-13);
            lo = bp;
        }
        total
    }

    /// Wronskian `W(x) = exp(-∫_0^x b1/b0 dt)` of the fundamental solutions.
    pub fn wronskian(&self, x: f64) -> Result<f64> {
        self.ensure_valid()?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        Ok((-self.drift_integral(0.0, x)).exp())
    }

    /// Integration layout shared by every evaluation at any λ.
    pub(crate) fn layout(&self) -> &Layout {
        self.layout.get_or_init(|| Layout::build(self))
    }
}

/// Evaluates a coefficient, see [`Coefficient::eval`].
pub fn eval_coeff(c: &Coefficient, x: f64) -> Result<f64> {
    c.eval(x)
}

/// Validates a problem, see [`Problem::validate`].
pub fn validate(problem: &Problem) -> ValidationReport {
    problem.validate()
}

fn merge_points(mut pts: Vec<f64>) -> Vec<f64> {
    pts.retain(|p| (0.0..=1.0).contains(p));
    pts.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(pts.len());
    for p in pts {
        match out.last() {
            Some(&last) if p - last <= MESH_MERGE => {
                // keep the endpoint 1 exact
                if p == 1.0 {
                    *out.last_mut().expect("non-empty") = 1.0;
                }
            }
            _ => out.push(p),
        }
    }
    out
}

/// Knot layout: integration restarts at every master-mesh breakpoint and every
/// measure quadrature node, so measure moments read exact knot values.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub knots: Vec<f64>,
    /// `(b0, b1)` cubic coefficients for each knot interval.
    pub pieces: Vec<([f64; 4], [f64; 4])>,
    /// `W` at every knot.
    pub wronskian: Vec<f64>,
    /// Quadrature weights of ν0 and ν1 attached to knot indices.
    pub nu0: Vec<(usize, f64)>,
    pub nu1: Vec<(usize, f64)>,
}

impl Layout {
    fn build(problem: &Problem) -> Layout {
        let n0 = problem.nu0.quadrature_nodes();
        let n1 = problem.nu1.quadrature_nodes();
        let mut pts = problem.master_mesh();
        pts.extend(n0.iter().map(|p| p.0));
        pts.extend(n1.iter().map(|p| p.0));
        let knots = merge_points(pts);
        let locate = |x: f64| -> usize {
            let i = knots.partition_point(|&k| k < x - MESH_MERGE);
            i.min(knots.len() - 1)
        };
        let pieces = knots
            .windows(2)
            .map(|w| (problem.b0.piece_at(w[0], w[1]), problem.b1.piece_at(w[0], w[1])))
            .collect();
        let mut wronskian = Vec::with_capacity(knots.len());
        let mut drift = 0.0;
        wronskian.push(1.0);
        for w in knots.windows(2) {
            drift += problem.drift_integral(w[0], w[1]);
            wronskian.push((-drift).exp());
        }
        Layout {
            nu0: n0.iter().map(|&(x, w)| (locate(x), w)).collect(),
            nu1: n1.iter().map(|&(x, w)| (locate(x), w)).collect(),
            knots,
            pieces,
            wronskian,
        }
    }
}
