//! Zeros of Δ with multiplicities via the argument principle.
//!
//! The number of zeros inside a rectangle, counted with multiplicity, is
//! `(1/2πi) ∮ Δ'/Δ dλ`. Each edge integral is computed by adaptive
//! Gauss–Kronrod quadrature; its real part must also reproduce
//! `ln|Δ(end)| - ln|Δ(start)|`, which serves as an independent accuracy check.
//! Boxes are bisected until every leaf holds a single simple zero or one small
//! cluster, whose centroid comes from the contour moments `∮ (λ - c)^k Δ'/Δ dλ`. Leaves are then refined by
//! Newton iteration and, for multiple zeros, by moments on a circle.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::characteristic::delta_unchecked;
use crate::error::{Error, Result};
use crate::ode::{Backend, ToleranceSettings};
use crate::problem::Problem;
use crate::quadrature::{kronrod_combine, kronrod_nodes};
pub use crate::region::ContourRegion;

type C = Complex64;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Tuning knobs of the zero search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchOptions {
    pub tol: ToleranceSettings,
    pub backend: Backend,
    /// Leaf boxes are smaller than this fraction of the search region diameter.
    pub isolation_fraction: f64,
    pub max_depth: usize,
    /// An edge is rejected when `min |Δ| < clearance_ratio * median |Δ|` on its samples.
    pub clearance_ratio: f64,
    pub edge_samples: usize,
    pub max_perturbations: usize,
    /// Largest accepted distance of a winding number from the nearest integer.
    pub winding_tol: f64,
    /// Quadrature target for a whole contour, in units of winding number.
    pub winding_target: f64,
    pub max_panels: usize,
    pub newton_max_iter: usize,
    /// Windings above this value are reported as suspicious.
    pub multiplicity_cap: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tol: ToleranceSettings::default(),
            backend: Backend::Auto,
            isolation_fraction: 1e-2,
            max_depth: 40,
            clearance_ratio: 1e-6,
            edge_samples: 33,
            max_perturbations: 8,
            winding_tol: 1e-3,
            winding_target: 1e-4,
            max_panels: 2000,
            newton_max_iter: 50,
            multiplicity_cap: 8,
        }
    }
}

impl SearchOptions {
    pub fn with_tol(tol: ToleranceSettings) -> Self {
        SearchOptions { tol, ..Self::default() }
    }
}

/// Outcome of one argument-principle count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZeroCount {
    pub count: usize,
    /// `(1/2πi) ∮ Δ'/Δ` before rounding.
    pub winding: C,
    /// Distance of `winding` from `count`.
    pub residual: f64,
    /// The contour actually used (differs from the request after perturbation).
    pub region: ContourRegion,
    pub perturbations: usize,
}

/// A box holding a single cluster of zeros.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsolatedZero {
    pub region: ContourRegion,
    pub count: usize,
    /// Mean of the zeros in the box, from contour moments.
    pub centroid: C,
    /// Root of the second central moment; 0 for a single (possibly multiple) zero.
    pub spread: f64,
    pub winding_residual: f64,
}

/// A located zero of Δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenvalue {
    pub location: C,
    pub multiplicity: u32,
    /// `|Δ(location)|`.
    pub residual: f64,
    /// Distance to the nearest other located zero (infinite when alone).
    pub separation: f64,
    pub iterations: usize,
    /// Radius of the circle on which the multiplicity was measured.
    pub winding_radius: f64,
    pub winding_residual: f64,
}

/// Non-fatal observations collected during a search.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpectrumDiagnostics {
    /// Distance from the nearest integer of every accepted contour count.
    pub winding_residuals: Vec<f64>,
    pub perturbations: usize,
    pub evaluations: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub region: ContourRegion,
    pub eigenvalues: Vec<Eigenvalue>,
    pub total_count: usize,
    pub diagnostics: SpectrumDiagnostics,
}

enum ContourFail {
    Clearance,
    Accuracy(String),
    Fatal(Error),
}

impl From<Error> for ContourFail {
    fn from(e: Error) -> Self {
        ContourFail::Fatal(e)
    }
}

type EdgeKey = [u64; 4];

/// Shared evaluation context: the problem, cached edge data and counters.
struct Search<'a> {
    problem: &'a Problem,
    opts: SearchOptions,
    evaluations: AtomicUsize,
    edge_cache: Mutex<HashMap<EdgeKey, C>>,
    clearance_cache: Mutex<HashMap<EdgeKey, bool>>,
}

fn edge_key(a: C, b: C) -> (EdgeKey, bool) {
    let ka = [a.re.to_bits(), a.im.to_bits()];
    let kb = [b.re.to_bits(), b.im.to_bits()];
    if (a.re, a.im) <= (b.re, b.im) {
        ([ka[0], ka[1], kb[0], kb[1]], false)
    } else {
        ([kb[0], kb[1], ka[0], ka[1]], true)
    }
}

fn edges(r: &ContourRegion) -> [(C, C); 4] {
    let c = r.corners();
    [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
}

fn nearest_integer_residual(w: C) -> (i64, f64) {
    let n = w.re.round();
    (n as i64, (w - C::new(n, 0.0)).norm())
}

impl<'a> Search<'a> {
    fn new(problem: &'a Problem, opts: SearchOptions) -> Self {
        Search {
            problem,
            opts,
            evaluations: AtomicUsize::new(0),
            edge_cache: Mutex::new(HashMap::new()),
            clearance_cache: Mutex::new(HashMap::new()),
        }
    }

    fn eval_with(&self, lambda: C, tol: ToleranceSettings) -> Result<(C, C)> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        delta_unchecked(self.problem, lambda, tol, self.opts.backend)
    }

    fn eval(&self, lambda: C) -> Result<(C, C)> {
        self.eval_with(lambda, self.opts.tol)
    }

    fn edge_clear(&self, a: C, b: C) -> std::result::Result<(), ContourFail> {
        let (key, _) = edge_key(a, b);
        if let Some(&ok) = self.clearance_cache.lock().unwrap().get(&key) {
            return if ok { Ok(()) } else { Err(ContourFail::Clearance) };
        }
        let n = self.opts.edge_samples.max(3);
        let ts: Vec<f64> = (0..n).map(|j| j as f64 / (n - 1) as f64).collect();
        let vals = ts
            .par_iter()
            .map(|&t| self.eval(a + (b - a) * t).map(|v| v.0))
            .collect::<Result<Vec<C>>>()?;
        let mut sorted: Vec<f64> = vals.iter().map(|v| v.norm()).collect();
        sorted.sort_by(f64::total_cmp);
        let floor = self.opts.clearance_ratio * sorted[n / 2];
        let mut ok = sorted.iter().all(|m| m.is_finite()) && sorted[0] > 0.0 && sorted[0] >= floor;
        if ok {
            for j in 0..n - 1 {
                if self.dips_between(a, b, (ts[j], vals[j]), (ts[j + 1], vals[j + 1]), floor)? {
                    ok = false;
                    break;
                }
            }
        }
        self.clearance_cache.lock().unwrap().insert(key, ok);
        if ok {
            Ok(())
        } else {
            Err(ContourFail::Clearance)
        }
    }

    /// Whether |Δ| drops below `floor` between two samples of the edge `a -> b`.
    ///
    /// A zero at distance `d` from the edge turns the phase of Δ by about
    /// `2 atan(L / 2d)` over a stretch of length `L` around it. The stretch
    /// with the larger phase change is halved while that change exceeds π/2,
    /// which walks down to the closest approach of a zero.
    fn dips_between(&self, a: C, b: C, lo: (f64, C), hi: (f64, C), floor: f64) -> Result<bool> {
        let jump = |u: C, v: C| (v / u).arg().abs();
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..60 {
            if jump(lo.1, hi.1) <= 0.5 * PI {
                return Ok(false);
            }
            let tm = 0.5 * (lo.0 + hi.0);
            if tm <= lo.0 || tm >= hi.0 {
                return Ok(true);
            }
            let vm = self.eval(a + (b - a) * tm)?.0;
            if !(vm.norm() >= floor) {
                return Ok(true);
            }
            if jump(lo.1, vm) >= jump(vm, hi.1) {
                hi = (tm, vm);
            } else {
                lo = (tm, vm);
            }
        }
        Ok(false)
    }

    /// `∫_a^b (λ - c)^k Δ'/Δ dλ` for `k = 0..=kmax`, to an absolute target on
    /// the k = 0 component of `target` (higher moments are scaled by `h^k`).
    fn edge_moments(
        &self,
        a: C,
        b: C,
        c: C,
        kmax: usize,
        h: f64,
        target: f64,
    ) -> std::result::Result<Vec<C>, ContourFail> {
        let dz = b - a;
        let ends = [self.eval(a)?.0, self.eval(b)?.0];
        if ends.iter().any(|d| !(d.norm() > 0.0) || !d.norm().is_finite()) {
            return Err(ContourFail::Clearance);
        }
        let log_gain = ends[1].norm().ln() - ends[0].norm().ln();

        let panel = |lo: f64, hi: f64| -> std::result::Result<(f64, f64, Vec<C>, f64), ContourFail> {
            let nodes = kronrod_nodes(lo, hi);
            let vals = nodes
                .par_iter()
                .map(|&t| {
                    let lam = a + dz * t;
                    let (d, dp) = self.eval(lam)?;
                    Ok((lam, dp / d * dz))
                })
                .collect::<Result<Vec<(C, C)>>>()?;
            if vals.iter().any(|v| !v.1.re.is_finite() || !v.1.im.is_finite()) {
                return Err(ContourFail::Clearance);
            }
            let mut moments = Vec::with_capacity(kmax + 1);
            let mut err = 0.0;
            for k in 0..=kmax {
                let f: [C; 15] = std::array::from_fn(|i| vals[i].1 * (vals[i].0 - c).powu(k as u32));
                let (v, e) = kronrod_combine(lo, hi, &f);
                moments.push(v);
                err += e / h.powi(k as i32);
            }
            Ok((lo, hi, moments, err))
        };

        let mut parts = Vec::new();
        for j in 0..4 {
            parts.push(panel(j as f64 / 4.0, (j + 1) as f64 / 4.0)?);
        }
        loop {
            let err: f64 = parts.iter().map(|p| p.3).sum();
            let total: Vec<C> = (0..=kmax).map(|k| parts.iter().map(|p| p.2[k]).sum()).collect();
            let gain_mismatch = (total[0].re - log_gain).abs();
            if err <= target && gain_mismatch <= target {
                return Ok(total);
            }
            if parts.len() >= self.opts.max_panels {
                return Err(ContourFail::Accuracy(format!(
                    "edge {a} -> {b}: quadrature error {err:e} after {} panels",
                    parts.len()
                )));
            }
            // With all local estimates small but the gain check failing, the
            // widest panel is the likeliest culprit.
            let idx = if err > target {
                (0..parts.len())
                    .max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3))
                    .unwrap()
            } else {
                (0..parts.len())
                    .max_by(|&i, &j| (parts[i].1 - parts[i].0).total_cmp(&(parts[j].1 - parts[j].0)))
                    .unwrap()
            };
            let (lo, hi, _, _) = parts.swap_remove(idx);
            let mid = 0.5 * (lo + hi);
            parts.push(panel(lo, mid)?);
            parts.push(panel(mid, hi)?);
        }
    }

    /// `∫_a^b Δ'/Δ dλ`, cached per undirected edge.
    fn edge_integral(&self, a: C, b: C) -> std::result::Result<C, ContourFail> {
        let (key, flipped) = edge_key(a, b);
        let cached = self.edge_cache.lock().unwrap().get(&key).copied();
        let v = match cached {
            Some(v) => v,
            None => {
                let (s, e) = if flipped { (b, a) } else { (a, b) };
                self.edge_clear(s, e)?;
                let target = self.opts.winding_target * 2.0 * PI / 4.0;
                let v = self.edge_moments(s, e, C::new(0.0, 0.0), 0, 1.0, target)?[0];
                self.edge_cache.lock().unwrap().insert(key, v);
                v
            }
        };
        Ok(if flipped { -v } else { v })
    }

    /// Count in `r` as given, without perturbation.
    fn count_exact(&self, r: &ContourRegion) -> std::result::Result<(usize, C, f64), ContourFail> {
        let mut total = C::new(0.0, 0.0);
        for (a, b) in edges(r) {
            total += self.edge_integral(a, b)?;
        }
        let w = total / C::new(0.0, 2.0 * PI);
        let (n, res) = nearest_integer_residual(w);
        if res > self.opts.winding_tol || n < 0 {
            return Err(ContourFail::Accuracy(format!("winding {w} over {r} is not a count")));
        }
        Ok((n as usize, w, res))
    }

    fn count_perturbed(&self, region: &ContourRegion) -> Result<ZeroCount> {
        region.check()?;
        let mut last = ContourFail::Clearance;
        for k in 0..=self.opts.max_perturbations {
            let r = if k == 0 {
                *region
            } else {
                let eps = 2f64.powi(k as i32 - 10);
                let fx = (k as f64 * GOLDEN).fract() - 0.5;
                let fy = (k as f64 * GOLDEN * GOLDEN).fract() - 0.5;
                let shift = C::new(fx * 0.5 * eps * region.width(), fy * 0.5 * eps * region.height());
                region.dilated(1.0 + eps, shift)
            };
            match self.count_exact(&r) {
                Ok((count, winding, residual)) => {
                    return Ok(ZeroCount {
                        count,
                        winding,
                        residual,
                        region: r,
                        perturbations: k,
                    })
                }
                Err(ContourFail::Fatal(e)) => return Err(e),
                Err(f) => last = f,
            }
        }
        Err(match last {
            ContourFail::Accuracy(msg) => Error::Accuracy(msg),
            _ => Error::ContourThroughZero {
                attempts: self.opts.max_perturbations,
            },
        })
    }

    /// Centroid and spread of the zeros in `r` from the first two moments.
    fn box_moments(&self, r: &ContourRegion, count: usize) -> std::result::Result<(C, f64, f64), ContourFail> {
        let c = r.center();
        let h = 0.5 * r.diameter();
        let target = self.opts.winding_target * 2.0 * PI / 4.0;
        let mut s = [C::new(0.0, 0.0); 3];
        for (a, b) in edges(r) {
            self.edge_clear(a, b)?;
            let m = self.edge_moments(a, b, c, 2, h, target)?;
            for k in 0..3 {
                s[k] += m[k];
            }
        }
        let s: Vec<C> = s.iter().map(|v| v / C::new(0.0, 2.0 * PI)).collect();
        let (n, res) = nearest_integer_residual(s[0]);
        if n != count as i64 || res > self.opts.winding_tol {
            return Err(ContourFail::Accuracy(format!(
                "moment count {} disagrees with count {count} over {r}",
                s[0]
            )));
        }
        let nf = count as f64;
        let mean = s[1] / nf;
        let var = s[2] / nf - mean * mean;
        Ok((c + mean, var.norm().sqrt(), res))
    }

    fn split(&self, r: &ContourRegion, count: usize, iso: f64, depth: usize) -> Result<Vec<IsolatedZero>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if depth > self.opts.max_depth {
            return Err(Error::PathologicalClustering(self.opts.max_depth));
        }
        // A simple zero is isolated by its box at any size: the moment centroid
        // is a good Newton start and refinement checks the winding number.
        let small = r.diameter() < iso;
        if count == 1 || small {
            match self.box_moments(r, count) {
                Ok((centroid, spread, res))
                    if (count == 1 && (small || r.contains(centroid))) || (small && spread < 0.05 * r.diameter()) =>
                {
                    return Ok(vec![IsolatedZero {
                        region: *r,
                        count,
                        centroid,
                        spread,
                        winding_residual: res,
                    }]);
                }
                Ok(_) => {}
                Err(ContourFail::Fatal(e)) => return Err(e),
                // Moment trouble: keep subdividing.
                Err(_) => {}
            }
        }
        let offsets = [0.0, 0.061, -0.097, 0.137, -0.173, 0.211, -0.239, 0.283];
        let mut last_err = String::new();
        for off in offsets {
            let children = split_box(r, off);
            let counts: std::result::Result<Vec<(usize, C, f64)>, ContourFail> =
                children.iter().map(|c| self.count_exact(c)).collect();
            match counts {
                Ok(cs) if cs.iter().map(|c| c.0).sum::<usize>() == count => {
                    let nested = children
                        .par_iter()
                        .zip(cs.par_iter())
                        .map(|(c, k)| self.split(c, k.0, iso, depth + 1))
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(nested.into_iter().flatten().collect());
                }
                Ok(cs) => {
                    last_err = format!(
                        "children of {r} count {:?}, parent counts {count}",
                        cs.iter().map(|c| c.0).collect::<Vec<_>>()
                    )
                }
                Err(ContourFail::Fatal(e)) => return Err(e),
                Err(ContourFail::Accuracy(m)) => last_err = m,
                Err(ContourFail::Clearance) => last_err = format!("split lines of {r} pass through zeros"),
            }
        }
        Err(Error::Accuracy(last_err))
    }

    /// Winding number and first moment of Δ on the circle `|λ - c| = r`.
    ///
    /// Returns `(winding, centroid offset sum Σ(λ_i - c), winding residual)`.
    fn circle(&self, c: C, r: f64, tol: ToleranceSettings) -> Result<(i64, C, f64)> {
        let mut n = 64;
        loop {
            let pts: Vec<C> = (0..n)
                .map(|j| c + C::from_polar(r, 2.0 * PI * j as f64 / n as f64))
                .collect();
            let vals = pts
                .par_iter()
                .map(|&l| self.eval_with(l, tol))
                .collect::<Result<Vec<(C, C)>>>()?;
            let mut arg = 0.0;
            let mut max_jump: f64 = 0.0;
            for j in 0..n {
                let step = (vals[(j + 1) % n].0 / vals[j].0).arg();
                max_jump = max_jump.max(step.abs());
                arg += step;
            }
            if (max_jump < PI / 4.0 || n >= 4096) && arg.is_finite() {
                let mut s0 = C::new(0.0, 0.0);
                let mut s1 = C::new(0.0, 0.0);
                for (p, v) in pts.iter().zip(&vals) {
                    let d = *p - c;
                    s0 += v.1 / v.0 * d;
                    s1 += v.1 / v.0 * d * d;
                }
                s0 /= n as f64;
                s1 /= n as f64;
                let wind = (arg / (2.0 * PI)).round() as i64;
                let (_, res) = nearest_integer_residual(s0);
                return Ok((wind, s1, res));
            }
            n *= 2;
        }
    }

    /// Refines one cluster given its starting estimate and isolation radius.
    fn refine_cluster(&self, region: &ContourRegion, start: C, count: usize, isolation: f64) -> Result<Eigenvalue> {
        let opts = &self.opts;
        let bound = region.dilated(2.0, C::new(0.0, 0.0));
        let mut lam = start;
        let mut iterations = 0;
        let mut last_step = f64::INFINITY;
        let mut diverged = false;
        if count == 1 {
            for _ in 0..opts.newton_max_iter {
                let (d, dp) = self.eval(lam)?;
                if d.norm() == 0.0 {
                    last_step = 0.0;
                    break;
                }
                let step = d / dp;
                iterations += 1;
                lam -= step;
                last_step = step.norm();
                if !lam.re.is_finite() || !lam.im.is_finite() || !bound.contains(lam) {
                    diverged = true;
                    break;
                }
                if last_step < 1e-12 * (1.0 + lam.norm()) {
                    break;
                }
            }
        } else {
            // Secant iteration on h = Δ/Δ', which has a simple zero at a multiple root.
            let h = |l: C| -> Result<C> {
                let (d, dp) = self.eval(l)?;
                Ok(if d.norm() == 0.0 { C::new(0.0, 0.0) } else { d / dp })
            };
            let mut prev = lam + 1e-3 * isolation.min(region.diameter());
            let mut h_prev = h(prev)?;
            let mut h_cur = h(lam)?;
            for _ in 0..opts.newton_max_iter {
                if h_cur.norm() == 0.0 || h_cur == h_prev {
                    break;
                }
                let step = h_cur * (lam - prev) / (h_cur - h_prev);
                iterations += 1;
                prev = lam;
                h_prev = h_cur;
                lam -= step;
                last_step = step.norm();
                if !lam.re.is_finite() || !lam.im.is_finite() || !bound.contains(lam) {
                    diverged = true;
                    break;
                }
                if last_step < 1e-12 * (1.0 + lam.norm()) {
                    break;
                }
                h_cur = h(lam)?;
            }
        }
        if diverged {
            lam = start;
        }

        let step_floor = if diverged || !last_step.is_finite() {
            0.0
        } else {
            10.0 * last_step
        };
        let radius = isolation
            .min(1e-2 * (1.0 + start.norm()))
            .max(step_floor)
            .max(1e-8 * (1.0 + start.norm()));
        let polish_tol = opts.tol.scaled(1e-2);
        let (mut wind, mut s1, mut res) = self.circle(lam, radius, polish_tol)?;
        if count > 1 && wind > 0 {
            // The centroid of a cluster is well conditioned even where the
            // individual zeros of the computed Δ are not.
            for _ in 0..2 {
                let c = lam + s1 / wind as f64;
                lam = c;
                (wind, s1, res) = self.circle(lam, radius, polish_tol)?;
                iterations += 1;
                if wind <= 0 {
                    break;
                }
            }
        }
        if wind != count as i64 {
            return Err(Error::Inconsistency(format!(
                "winding {wind} on radius {radius:e} around {lam} but box count {count}"
            )));
        }
        let residual = self.eval(lam)?.0.norm();
        Ok(Eigenvalue {
            location: lam,
            multiplicity: count as u32,
            residual,
            separation: f64::INFINITY,
            iterations,
            winding_radius: radius,
            winding_residual: res,
        })
    }
}

fn split_box(r: &ContourRegion, offset: f64) -> Vec<ContourRegion> {
    let (w, h) = (r.width(), r.height());
    let xm = r.re_min + (0.5 + offset) * w;
    let ym = r.im_min + (0.5 - offset * GOLDEN) * h;
    let xs = |lo, hi| ContourRegion {
        re_min: lo,
        re_max: hi,
        ..*r
    };
    if w > 2.0 * h {
        vec![xs(r.re_min, xm), xs(xm, r.re_max)]
    } else if h > 2.0 * w {
        vec![ContourRegion { im_max: ym, ..*r }, ContourRegion { im_min: ym, ..*r }]
    } else {
        let mut out = Vec::with_capacity(4);
        for (lo, hi) in [(r.im_min, ym), (ym, r.im_max)] {
            out.push(ContourRegion {
                re_min: r.re_min,
                re_max: xm,
                im_min: lo,
                im_max: hi,
            });
            out.push(ContourRegion {
                re_min: xm,
                re_max: r.re_max,
                im_min: lo,
                im_max: hi,
            });
        }
        out
    }
}

/// Number of zeros of Δ inside `region`, with multiplicity.
pub fn count_zeros(problem: &Problem, region: &ContourRegion, tol: ToleranceSettings) -> Result<usize> {
    Ok(count_zeros_detailed(problem, region, &SearchOptions::with_tol(tol))?.count)
}

/// [`count_zeros`] with the raw winding number and perturbation record.
pub fn count_zeros_detailed(problem: &Problem, region: &ContourRegion, opts: &SearchOptions) -> Result<ZeroCount> {
    problem.ensure_valid()?;
    Search::new(problem, *opts).count_perturbed(region)
}

/// Boxes each holding one cluster of zeros (a single, possibly multiple, zero).
pub fn localize(problem: &Problem, region: &ContourRegion, opts: &SearchOptions) -> Result<Vec<IsolatedZero>> {
    problem.ensure_valid()?;
    let search = Search::new(problem, *opts);
    let zc = search.count_perturbed(region)?;
    let iso = opts.isolation_fraction * region.diameter();
    search.split(&zc.region, zc.count, iso, 0)
}

/// Refines the zero(s) in `region`, which must contain `count` zeros of one cluster.
pub fn refine(problem: &Problem, region: &ContourRegion, count: usize, opts: &SearchOptions) -> Result<Eigenvalue> {
    problem.ensure_valid()?;
    if count == 0 {
        return Err(Error::Precondition("refine needs a box with a positive count".into()));
    }
    let search = Search::new(problem, *opts);
    let start = match search.box_moments(region, count) {
        Ok((c, _, _)) => c,
        Err(ContourFail::Fatal(e)) => return Err(e),
        Err(_) => region.center(),
    };
    let isolation = 0.5 * region.width().min(region.height());
    search.refine_cluster(region, start, count, isolation.max(region.distance_to(start)))
}

/// All zeros of Δ in `region` with multiplicities.
pub fn find_spectrum(problem: &Problem, region: &ContourRegion, opts: &SearchOptions) -> Result<SpectrumResult> {
    problem.ensure_valid()?;
    let search = Search::new(problem, *opts);
    let zc = search.count_perturbed(region)?;
    let iso = opts.isolation_fraction * region.diameter();
    let leaves = search.split(&zc.region, zc.count, iso, 0)?;

    let isolation: Vec<f64> = leaves
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let sep = leaves
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, m)| (m.centroid - l.centroid).norm())
                .fold(f64::INFINITY, f64::min);
            0.45 * sep
        })
        .collect();
    let mut eigenvalues = leaves
        .par_iter()
        .zip(isolation.par_iter())
        .map(|(l, &iso)| search.refine_cluster(&l.region, l.centroid, l.count, iso))
        .collect::<Result<Vec<_>>>()?;
    eigenvalues.sort_by(|a, b| {
        a.location
            .re
            .total_cmp(&b.location.re)
            .then(a.location.im.total_cmp(&b.location.im))
    });
    let locs: Vec<C> = eigenvalues.iter().map(|e| e.location).collect();
    for (i, e) in eigenvalues.iter_mut().enumerate() {
        e.separation = locs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, l)| (l - e.location).norm())
            .fold(f64::INFINITY, f64::min);
    }

    let total: usize = eigenvalues.iter().map(|e| e.multiplicity as usize).sum();
    if total != zc.count {
        return Err(Error::Inconsistency(format!(
            "multiplicities sum to {total} but the region count is {}",
            zc.count
        )));
    }
    let mut diagnostics = SpectrumDiagnostics {
        winding_residuals: std::iter::once(zc.residual)
            .chain(leaves.iter().map(|l| l.winding_residual))
            .chain(eigenvalues.iter().map(|e| e.winding_residual))
            .collect(),
        perturbations: zc.perturbations,
        evaluations: 0,
        notes: Vec::new(),
    };
    if zc.perturbations > 0 {
        diagnostics.notes.push(format!(
            "region perturbed {} time(s) to clear zeros near the contour; searched {}",
            zc.perturbations, zc.region
        ));
    }
    for e in &eigenvalues {
        if e.multiplicity > opts.multiplicity_cap {
            diagnostics.notes.push(format!(
                "multiplicity {} at {} exceeds {}; suspect contour pathology",
                e.multiplicity, e.location, opts.multiplicity_cap
            ));
        }
    }
    diagnostics.evaluations = search.evaluations.load(Ordering::Relaxed);
    Ok(SpectrumResult {
        region: zc.region,
        eigenvalues,
        total_count: zc.count,
        diagnostics,
    })
}

/// The eigenvalue nearest `guess` within the square of half-width `radius` around it.
///
/// Fails with [`Error::NotFound`] when the square holds no zero of Δ.
pub fn eigenvalue_near(problem: &Problem, guess: C, radius: f64, opts: &SearchOptions) -> Result<Eigenvalue> {
    if !(radius > 0.0) || !guess.re.is_finite() || !guess.im.is_finite() {
        return Err(Error::Domain(format!("bad neighbourhood {guess} with radius {radius}")));
    }
    let spectrum = find_spectrum(problem, &ContourRegion::around(guess, radius), opts)?;
    spectrum
        .eigenvalues
        .into_iter()
        .min_by(|a, b| (a.location - guess).norm().total_cmp(&(b.location - guess).norm()))
        .ok_or_else(|| Error::NotFound(format!("no eigenvalue within {radius:e} of {guess}")))
}

/// Smallest real part among the eigenvalues found in `search`.
///
/// The region must stay at least 1e-6 away from the trivial eigenvalue 0.
pub fn spectral_gap(problem: &Problem, search: &ContourRegion, opts: &SearchOptions) -> Result<f64> {
    Ok(spectral_gap_detailed(problem, search, opts)?.0)
}

/// [`spectral_gap`] together with the spectrum it was taken from.
pub fn spectral_gap_detailed(
    problem: &Problem,
    search: &ContourRegion,
    opts: &SearchOptions,
) -> Result<(f64, SpectrumResult)> {
    search.check()?;
    if search.distance_to(C::new(0.0, 0.0)) < 1e-6 {
        return Err(Error::Precondition(format!(
            "search region {search} must exclude a disk of radius 1e-6 around 0"
        )));
    }
    let spectrum = find_spectrum(problem, search, opts)?;
    let gap = spectrum
        .eigenvalues
        .iter()
        .map(|e| e.location.re)
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::NotFound(format!(
            "no eigenvalues in {search}; enlarge the search region"
        )));
    }
    Ok((gap, spectrum))
}
