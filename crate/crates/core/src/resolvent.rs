//! Resolvents applied to sampled right-hand sides.
//!
//! * [`green_dirichlet_apply`]: the Dirichlet problem `u(0) = u(1) = 0`.
//! * [`tilde_resolvent_apply`]: the initial-value problem `u(0) = u'(0) = 0`,
//!   defined for every λ.
//! * [`resolvent_apply`]: the nonlocal problem, as the Dirichlet solution
//!   plus two rank-one corrections `g0 ∫v dν0 + g1 ∫v dν1`.
//!
//! Each solves `b0 u'' + b1 u' - λ u = f`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::characteristic::char_matrix_from_basis;
use crate::error::{Error, Result};
use crate::ode::{integrate_basis, FundamentalBasis, ToleranceSettings};
use crate::problem::{eval_coeff, Problem};
use crate::quadrature::gauss_legendre_7;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Default number of uniform nodes for sampled functions.
pub const DEFAULT_NODES: usize = 257;

/// Relative threshold below which `y2(1, λ)` or `Δ(λ)` count as zero.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;

/// Complex samples on a mesh of [0, 1], interpolated by local cubics.
///
/// An interior node may appear twice to mark a jump: the first copy holds the
/// left limit and the second the right limit. Interpolation never reaches
/// across a jump, and the function is right-continuous there.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    nodes: Vec<f64>,
    values: Vec<C>,
}

impl SampledFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<C>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::Domain(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 4 {
            return Err(Error::Domain("cubic interpolation needs at least 4 nodes".into()));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::Domain("nodes must start at 0 and end at 1".into()));
        }
        if !nodes.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::Domain("nodes must be increasing".into()));
        }
        if nodes.windows(3).any(|w| w[0] == w[2]) {
            return Err(Error::Domain("a node may appear at most twice".into()));
        }
        let mut bounds = piece_starts(&nodes);
        bounds.push(nodes.len());
        if bounds.windows(2).any(|w| w[1] - w[0] < 2) {
            return Err(Error::Domain("every piece between jumps needs at least 2 nodes".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Domain("values must be finite".into()));
        }
        Ok(SampledFunction { nodes, values })
    }

    /// `n` uniform nodes on [0, 1].
    pub fn uniform_nodes(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Samples `f` on `n` uniform nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> C) -> Result<Self> {
        let nodes = Self::uniform_nodes(n);
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values)
    }

    /// The constant `c` on [`DEFAULT_NODES`] uniform nodes.
    pub fn constant(c: C) -> Self {
        Self::from_fn(DEFAULT_NODES, |_| c).expect("uniform mesh is valid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[C] {
        &self.values
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// The nodes with the second copy of every jump removed.
    pub fn distinct_nodes(&self) -> Vec<f64> {
        let mut nodes = self.nodes.clone();
        nodes.dedup();
        nodes
    }

    /// Cubic through the four nodes nearest the interval containing `x`,
    /// taken from the piece between jumps that contains `x`. Pieces with
    /// fewer than four nodes use the polynomial through all of them.
    pub fn eval(&self, x: f64) -> Result<C> {
        let (lo, hi) = self.jump_piece(x)?;
        Ok(self.lagrange(x, lo, hi))
    }

    /// Like [`eval`](Self::eval), using only the nodes in `[a, b]`, for a
    /// function that is smooth only between `a` and `b`. Falls back to
    /// [`eval`](Self::eval) when fewer than two nodes lie there.
    pub fn eval_between(&self, x: f64, a: f64, b: f64) -> Result<C> {
        if !(a <= x && x <= b) {
            return Err(Error::Domain(format!("x = {x} outside [{a}, {b}]")));
        }
        let (lo, hi) = self.jump_piece(x)?;
        let first = lo + self.nodes[lo..hi].partition_point(|&p| p < a);
        let end = lo + self.nodes[lo..hi].partition_point(|&p| p <= b);
        if end < first + 2 {
            return Ok(self.lagrange(x, lo, hi));
        }
        Ok(self.lagrange(x, first, end))
    }

    /// Index range of the piece between jumps that contains `x`.
    fn jump_piece(&self, x: f64) -> Result<(usize, usize)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
        }
        let starts = piece_starts(&self.nodes);
        let k = starts.partition_point(|&s| self.nodes[s] <= x).max(1) - 1;
        Ok((starts[k], starts.get(k + 1).copied().unwrap_or(self.nodes.len())))
    }

    /// Polynomial through the (up to) four nodes of `lo..hi` nearest `x`.
    fn lagrange(&self, x: f64, lo: usize, hi: usize) -> C {
        let nodes = &self.nodes[lo..hi];
        let n = nodes.len();
        let m = n.min(4);
        let i = nodes.partition_point(|&p| p <= x).clamp(1, n - 1) - 1;
        let start = lo + i.saturating_sub(1).min(n - m);
        let xs = &self.nodes[start..start + m];
        let ys = &self.values[start..start + m];
        let mut acc = ZERO;
        for j in 0..m {
            let mut l = 1.0;
            for k in 0..m {
                if k != j {
                    l *= (x - xs[k]) / (xs[j] - xs[k]);
                }
            }
            acc += ys[j] * l;
        }
        acc
    }

    /// Reads CSV with header `x,re_f,im_f`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| Error::Parse(format!("{}: {e}", path.display()));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| bad(&e))?;
        let headers = reader.headers().map_err(|e| bad(&e))?;
        if headers.iter().collect::<Vec<_>>() != ["x", "re_f", "im_f"] {
            return Err(bad(&"expected header x,re_f,im_f"));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for row in reader.deserialize::<(f64, f64, f64)>() {
            let (x, re, im) = row.map_err(|e| bad(&e))?;
            nodes.push(x);
            values.push(C::new(re, im));
        }
        Self::new(nodes, values).map_err(|e| bad(&e))
    }

    /// Writes CSV with header `x,re_f,im_f` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(["x", "re_f", "im_f"]).map_err(io)?;
        for (x, v) in self.nodes.iter().zip(&self.values) {
            w.write_record([format!("{x:.16e}"), format!("{:.16e}", v.re), format!("{:.16e}", v.im)])
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Index of the first node of every piece between jumps.
fn piece_starts(nodes: &[f64]) -> Vec<usize> {
    std::iter::once(0)
        .chain((1..nodes.len()).filter(|&i| nodes[i] == nodes[i - 1]))
        .collect()
}

/// Fornberg weights for derivatives 0..=2 at `z` from the nodes `xs`.
fn fornberg(z: f64, xs: &[f64]) -> [Vec<f64>; 3] {
    let n = xs.len();
    let mut c = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(2);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives at every node from 7-point stencils that stay
/// inside one piece of `breaks` (where the second derivative may jump).
fn stencil_derivatives(u: &SampledFunction, breaks: &[f64]) -> Result<(Vec<C>, Vec<C>)> {
    let n = u.nodes.len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for (i, &x) in u.nodes.iter().enumerate() {
        // Right-hand piece at interior breakpoints, matching coefficient evaluation.
        let k = breaks.partition_point(|&b| b <= x).clamp(1, breaks.len() - 1);
        let (lo, hi) = if x == 1.0 {
            (breaks[breaks.len() - 2], 1.0)
        } else {
            (breaks[k - 1], breaks[k])
        };
        let first = u.nodes.partition_point(|&p| p < lo);
        let end = u.nodes.partition_point(|&p| p <= hi);
        let width = (end - first).min(7);
        if width < 3 {
            return Err(Error::Domain(format!(
                "too few nodes in [{lo}, {hi}] for derivative stencils"
            )));
        }
        let start = i.saturating_sub(width / 2).max(first).min(end - width);
        let w = fornberg(x, &u.nodes[start..start + width]);
        let vals = &u.values[start..start + width];
        d1.push(vals.iter().zip(&w[1]).map(|(v, c)| v * c).sum());
        d2.push(vals.iter().zip(&w[2]).map(|(v, c)| v * c).sum());
    }
    Ok((d1, d2))
}

/// `max |b0 u'' + b1 u' - λ u - f|` over the nodes of `u`, with derivatives of
/// the samples taken by 7-point finite-difference stencils within each
/// coefficient piece.
pub fn differential_residual(problem: &Problem, lambda: C, u: &SampledFunction, f: &SampledFunction) -> Result<f64> {
    let (d1, d2) = stencil_derivatives(u, &coefficient_breaks(problem))?;
    let mut worst: f64 = 0.0;
    for (i, &x) in u.nodes.iter().enumerate() {
        let b0 = eval_coeff(problem.b0(), x)?;
        let b1 = eval_coeff(problem.b1(), x)?;
        let r = d2[i] * b0 + d1[i] * b1 - lambda * u.values[i] - f.eval(x)?;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// `(u(0) - ∫u dν0, u(1) - ∫u dν1)` with `u` interpolated between samples.
///
/// Solutions have a second derivative that jumps where `b0` does, so the
/// interpolation stays inside the coefficient piece of each measure node.
pub fn boundary_residuals(problem: &Problem, u: &SampledFunction) -> Result<(C, C)> {
    let breaks = coefficient_breaks(problem);
    let int = |nu: &crate::problem::BoundaryMeasure| -> Result<C> {
        nu.quadrature_nodes()
            .into_iter()
            .map(|(x, w)| {
                let k = breaks.partition_point(|&b| b <= x).clamp(1, breaks.len() - 1);
                u.eval_between(x, breaks[k - 1], breaks[k]).map(|v| v * w)
            })
            .sum()
    };
    Ok((u.eval(0.0)? - int(problem.nu0())?, u.eval(1.0)? - int(problem.nu1())?))
}

/// Sorted breakpoints of both coefficients together with 0 and 1.
fn coefficient_breaks(problem: &Problem) -> Vec<f64> {
    let mut breaks = problem.b0().breakpoints().to_vec();
    breaks.extend_from_slice(problem.b1().breakpoints());
    breaks.extend([0.0, 1.0]);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Values of the solution pair at one point.
#[derive(Clone, Copy)]
struct Pair {
    /// `y1`: unit value and zero slope at 0.
    y1: C,
    /// `ψL = y2`: zero value and unit slope at 0.
    left: C,
    /// `ψR`: zero value and slope -1 at 1.
    right: C,
}

/// Fixed pieces shared by the three apply operations.
///
/// `ψR` is integrated from x = 1 through the reflected problem, so each of
/// `ψL` and `ψR` is computed in the direction in which it grows. Kernels built
/// from the two are products rather than differences of large numbers, which
/// keeps the sampled outputs smooth when the solutions are exponential.
struct Setup {
    basis: FundamentalBasis,
    /// Union of the output nodes, coefficient breakpoints and measure nodes.
    mesh: Vec<f64>,
    at_mesh: Vec<Pair>,
    /// `(weight, pair at t, f(t) / (b0(t) w(t)))` for every quadrature node,
    /// per mesh interval, where `w` is the Wronskian of `y1, y2`.
    panels: Vec<Vec<(f64, Pair, C)>>,
    /// `W(ψL, ψR) / w = -ψR(0)`.
    wronskian: C,
    /// `max |ψR|` over the mesh.
    right_scale: f64,
}

fn setup(problem: &Problem, lambda: C, f: &SampledFunction, tol: ToleranceSettings) -> Result<Setup> {
    problem.ensure_valid()?;
    let basis = integrate_basis(problem, lambda, tol)?;
    let mirror = integrate_basis(&problem.reflected(), lambda, tol)?;
    let pair = |x: f64| -> Result<Pair> {
        let p = basis.eval(x)?;
        Ok(Pair {
            y1: p.y1,
            left: p.y2,
            right: mirror.eval(1.0 - x)?.y2,
        })
    };
    let mut mesh: Vec<f64> = f.nodes.clone();
    mesh.extend(problem.master_mesh());
    for nu in [problem.nu0(), problem.nu1()] {
        mesh.extend(nu.quadrature_nodes().into_iter().map(|q| q.0));
    }
    mesh.sort_by(f64::total_cmp);
    mesh.dedup();
    let at_mesh = mesh.iter().map(|&x| pair(x)).collect::<Result<Vec<_>>>()?;
    let mut panels = Vec::with_capacity(mesh.len() - 1);
    let mut w_left = 1.0;
    for win in mesh.windows(2) {
        let (a, b) = (win[0], win[1]);
        let mut panel = Vec::with_capacity(7);
        for (t, q) in gauss_legendre_7(a, b) {
            let w = w_left * (-problem.drift_integral(a, t)).exp();
            let scale = eval_coeff(problem.b0(), t)? * w;
            panel.push((q, pair(t)?, f.eval(t)? / scale));
        }
        panels.push(panel);
        w_left *= (-problem.drift_integral(a, b)).exp();
    }
    let wronskian = -at_mesh[0].right;
    let right_scale = at_mesh.iter().map(|p| p.right.norm()).fold(0.0, f64::max);
    Ok(Setup {
        basis,
        mesh,
        at_mesh,
        panels,
        wronskian,
        right_scale,
    })
}

/// Running integrals `∫_0^{mesh[k]} g` for every mesh node.
fn cumulative(s: &Setup, g: impl Fn(&Pair, C) -> C) -> Vec<C> {
    let mut out = Vec::with_capacity(s.mesh.len());
    let mut acc = ZERO;
    out.push(acc);
    for panel in &s.panels {
        for (q, p, fw) in panel {
            acc += g(p, *fw) * *q;
        }
        out.push(acc);
    }
    out
}

/// Running integrals `∫_{mesh[k]}^1 g`, summed from the right.
fn cumulative_from_right(s: &Setup, g: impl Fn(&Pair, C) -> C) -> Vec<C> {
    let mut out = vec![ZERO; s.mesh.len()];
    let mut acc = ZERO;
    for (k, panel) in s.panels.iter().enumerate().rev() {
        for (q, p, fw) in panel.iter().rev() {
            acc += g(p, *fw) * *q;
        }
        out[k] = acc;
    }
    out
}

fn restrict(s: &Setup, full: &[C], nodes: &[f64]) -> Vec<C> {
    nodes
        .iter()
        .map(|x| {
            let k = s.mesh.partition_point(|m| m < x);
            full[k]
        })
        .collect()
}

fn check_dirichlet(lambda: C, s: &Setup) -> Result<()> {
    if s.wronskian.norm() <= SINGULARITY_THRESHOLD * s.right_scale {
        return Err(Error::NearSingular {
            lambda,
            detail: format!(
                "the solution vanishing at 1 has |value at 0| = {:e} (scale {:e}): λ is within the Dirichlet spectrum threshold",
                s.wronskian.norm(),
                s.right_scale
            ),
        });
    }
    Ok(())
}

/// Dirichlet solution on the whole union mesh:
/// `u(x) = (ψR(x) ∫_0^x ψL g + ψL(x) ∫_x^1 ψR g) / W`.
fn dirichlet_on_mesh(lambda: C, s: &Setup) -> Result<Vec<C>> {
    check_dirichlet(lambda, s)?;
    let lower = cumulative(s, |p, fw| p.left * fw);
    let upper = cumulative_from_right(s, |p, fw| p.right * fw);
    Ok(s.at_mesh
        .iter()
        .enumerate()
        .map(|(k, p)| (p.right * lower[k] + p.left * upper[k]) / s.wronskian)
        .collect())
}

/// `u = R_λ(L0) f`: the solution of `b0 u'' + b1 u' - λu = f`, `u(0) = u(1) = 0`.
pub fn green_dirichlet_apply(
    problem: &Problem,
    lambda: C,
    f: &SampledFunction,
    tol: ToleranceSettings,
) -> Result<SampledFunction> {
    let s = setup(problem, lambda, f, tol)?;
    let u = dirichlet_on_mesh(lambda, &s)?;
    let nodes = f.distinct_nodes();
    let values = restrict(&s, &u, &nodes);
    SampledFunction::new(nodes, values)
}

/// Below this ratio `|W(ψL, ψR)| / max |ψR|` the initial-value kernel is
/// formed from `y1, y2` instead, since `ψL` and `ψR` are nearly dependent.
const PAIR_SWITCH: f64 = 1e-2;

/// `u = R_λ(L̃0) f`: the solution with `u(0) = u'(0) = 0`, for any λ.
pub fn tilde_resolvent_apply(
    problem: &Problem,
    lambda: C,
    f: &SampledFunction,
    tol: ToleranceSettings,
) -> Result<SampledFunction> {
    let s = setup(problem, lambda, f, tol)?;
    let u: Vec<C> = if s.wronskian.norm() >= PAIR_SWITCH * s.right_scale {
        let cl = cumulative(&s, |p, fw| p.left * fw);
        let cr = cumulative(&s, |p, fw| p.right * fw);
        s.at_mesh
            .iter()
            .enumerate()
            .map(|(k, p)| (p.right * cl[k] - p.left * cr[k]) / s.wronskian)
            .collect()
    } else {
        let c1 = cumulative(&s, |p, fw| p.y1 * fw);
        let c2 = cumulative(&s, |p, fw| p.left * fw);
        s.at_mesh
            .iter()
            .enumerate()
            .map(|(k, p)| p.left * c1[k] - p.y1 * c2[k])
            .collect()
    };
    let nodes = f.distinct_nodes();
    let values = restrict(&s, &u, &nodes);
    SampledFunction::new(nodes, values)
}

/// `u = R_λ(L) f` for the nonlocal problem.
///
/// The solution is `v + a h0 + b h1` with `v` the Dirichlet solution,
/// `h0 = ψR / ψR(0)` and `h1 = ψL / ψL(1)`; the two boundary conditions give a
/// 2×2 system for `a = u(0)` and `b = u(1)`. Refuses λ within the relative
/// threshold of a zero of Δ or of the Dirichlet spectrum.
pub fn resolvent_apply(
    problem: &Problem,
    lambda: C,
    f: &SampledFunction,
    tol: ToleranceSettings,
) -> Result<SampledFunction> {
    let s = setup(problem, lambda, f, tol)?;
    let cm = char_matrix_from_basis(problem, &s.basis);
    let det = cm.det();
    let det_scale = (cm.m[0][0] * cm.m[1][1]).norm() + (cm.m[0][1] * cm.m[1][0]).norm();
    if det.norm() <= SINGULARITY_THRESHOLD * det_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NearSingular {
            lambda,
            detail: format!(
                "|Δ| = {:e} (scale {:e}): λ is at or near an eigenvalue",
                det.norm(),
                det_scale
            ),
        });
    }
    let v = dirichlet_on_mesh(lambda, &s)?;
    let last = s.at_mesh.len() - 1;
    let (r0, l1) = (s.at_mesh[0].right, s.at_mesh[last].left);
    // Measure nodes are mesh nodes, so integrals against ν are exact on the mesh values.
    let integral = |nu: &crate::problem::BoundaryMeasure, g: &dyn Fn(usize) -> C| -> C {
        nu.quadrature_nodes()
            .into_iter()
            .map(|(x, w)| g(s.mesh.partition_point(|m| *m < x)) * w)
            .sum()
    };
    let h0 = |k: usize| s.at_mesh[k].right / r0;
    let h1 = |k: usize| s.at_mesh[k].left / l1;
    let (nu0, nu1) = (problem.nu0(), problem.nu1());
    let m = [
        [1.0 - integral(nu0, &h0), -integral(nu0, &h1)],
        [-integral(nu1, &h0), 1.0 - integral(nu1, &h1)],
    ];
    let rhs = [integral(nu0, &|k| v[k]), integral(nu1, &|k| v[k])];
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let a = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / d;
    let b = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / d;
    let u: Vec<C> = (0..s.mesh.len()).map(|k| v[k] + a * h0(k) + b * h1(k)).collect();
    let nodes = f.distinct_nodes();
    let values = restrict(&s, &u, &nodes);
    SampledFunction::new(nodes, values)
}
