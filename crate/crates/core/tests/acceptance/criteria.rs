//! The numbered acceptance criteria.
//!
//! Criteria 4 and 9 are checked exactly as stated and are expected to fail;
//! `c04b` and `c09b` check the attainable versions next to them.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::Instant;

use nonlocal_spectrum::characteristic::{delta, delta_with_prime_using};
use nonlocal_spectrum::ode::{closed_form_basis, integrate_basis, Backend, BasisPoint, ToleranceSettings};
use nonlocal_spectrum::oracles::{de_delta_tilde, de_gap, de_spectrum, dexin_spectrum, DeSpec, DexinSpec};
use nonlocal_spectrum::problem::Problem;
use nonlocal_spectrum::region::ContourRegion;
use nonlocal_spectrum::resolvent::{boundary_residuals, differential_residual, resolvent_apply, SampledFunction};
use nonlocal_spectrum::rootfinder::{count_zeros_detailed, find_spectrum, spectral_gap, SearchOptions, SpectrumResult};
use rand::Rng;

use crate::support::{disk_point, random_problem, rng, verdict, C};

const PI2: f64 = PI * PI;

fn region(a: f64, b: f64, c: f64, d: f64) -> ContourRegion {
    ContourRegion::new(a, b, c, d).unwrap()
}

/// Largest relative location error between `found` and `expected` when the
/// multiplicities match one to one, `None` otherwise.
fn match_spectrum(found: &SpectrumResult, expected: &[(C, u32)]) -> Option<f64> {
    if found.eigenvalues.len() != expected.len() {
        return None;
    }
    let mut used = vec![false; expected.len()];
    let mut worst: f64 = 0.0;
    for e in &found.eigenvalues {
        let (j, err) = expected
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, (z, _))| (j, (e.location - z).norm() / z.norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if expected[j].1 != e.multiplicity {
            return None;
        }
        used[j] = true;
        worst = worst.max(err);
    }
    Some(worst)
}

fn describe(found: &SpectrumResult) -> String {
    found
        .eigenvalues
        .iter()
        .map(|e| format!("{:.9}x{}", e.location, e.multiplicity))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn c01_dexin_half_triple_at_sixteen_pi_squared() {
    let started = Instant::now();
    let found = find_spectrum(
        &DexinSpec::new(0.5).unwrap().problem(),
        &region(1.0, 400.0, -1.0, 1.0),
        &SearchOptions::default(),
    )
    .unwrap();
    let elapsed = started.elapsed();
    let expected = [(4.0 * PI2, 1), (16.0 * PI2, 3), (36.0 * PI2, 1)].map(|(x, m)| (C::new(x, 0.0), m));
    let err = match_spectrum(&found, &expected);
    let ok = err.is_some_and(|e| e < 1e-8) && elapsed.as_secs_f64() < 30.0;
    verdict(
        "1",
        "a = 1/2 spectrum in [1,400]x[-1,1]",
        ok,
        format!("{}; max rel err {err:?}; {elapsed:.2?}", describe(&found)),
    );
}

#[test]
fn c02_dexin_third_triple_at_thirty_six_pi_squared() {
    let found = find_spectrum(
        &DexinSpec::new(1.0 / 3.0).unwrap().problem(),
        &region(1.0, 400.0, -1.0, 1.0),
        &SearchOptions::default(),
    )
    .unwrap();
    let target = C::new(36.0 * PI2, 0.0);
    let hit = found
        .eigenvalues
        .iter()
        .find(|e| (e.location - target).norm() < 1e-3 * target.norm());
    let ok = hit.is_some_and(|e| e.multiplicity == 3 && (e.location - target).norm() / target.norm() < 1e-8);
    verdict("2", "a = 1/3 triple eigenvalue at 36 pi^2", ok, describe(&found));
}

#[test]
fn c03_dexin_irrational_all_simple() {
    let spec = DexinSpec::new(FRAC_1_SQRT_2).unwrap();
    let r = region(1.0, 600.0, -1.0, 1.0);
    let found = find_spectrum(&spec.problem(), &r, &SearchOptions::default()).unwrap();
    let expected: Vec<(C, u32)> = dexin_spectrum(spec, 600.0)
        .unwrap()
        .into_iter()
        .filter(|&(x, _)| x >= 1.0)
        .map(|(x, m)| (C::new(x, 0.0), m))
        .collect();
    let all_simple = !found.eigenvalues.is_empty() && found.eigenvalues.iter().all(|e| e.multiplicity == 1);
    let err = match_spectrum(&found, &expected);
    verdict(
        "3",
        "a = 1/sqrt 2 eigenvalues in [1,600]x[-1,1] all simple",
        all_simple && err.is_some_and(|e| e < 1e-8),
        format!("{} eigenvalues; {}", found.eigenvalues.len(), describe(&found)),
    );
}

fn drift_spectrum() -> SpectrumResult {
    find_spectrum(
        &DeSpec::new(-1.0, 1.0).unwrap().problem(),
        &region(1.0, 200.0, -20.0, 20.0),
        &SearchOptions::default(),
    )
    .unwrap()
}

/// Checked exactly as stated: expected to fail, see `c04b`.
#[test]
fn c04_drift_spectrum_as_stated() {
    let found = drift_spectrum();
    let expected = [
        (C::new(4.0 * PI2 + 0.25, 0.0), 1),
        (C::new(16.0 * PI2, -2.0 * PI), 1),
        (C::new(16.0 * PI2, 2.0 * PI), 1),
    ];
    let err = match_spectrum(&found, &expected);
    verdict(
        "4",
        "b0 = -1, b1 = 1 spectrum {4pi^2+1/4, 16pi^2 +- 2pi i} in [1,200]x[-20,20]",
        err.is_some_and(|e| e < 1e-8),
        format!("found {}", describe(&found)),
    );
}

#[test]
fn c04b_drift_spectrum_against_closed_form() {
    let found = drift_spectrum();
    let r = region(1.0, 200.0, -20.0, 20.0);
    let expected: Vec<(C, u32)> = de_spectrum(DeSpec::new(-1.0, 1.0).unwrap(), 4)
        .unwrap()
        .into_iter()
        .filter(|(z, _)| r.contains(*z))
        .collect();
    let err = match_spectrum(&found, &expected);
    let paired = found.eigenvalues.iter().all(|e| {
        found
            .eigenvalues
            .iter()
            .any(|o| (o.location - e.location.conj()).norm() < 1e-8 * e.location.norm())
    });
    verdict(
        "4b",
        "b0 = -1, b1 = 1 spectrum {4pi^2+1/4, 16pi^2+1/4, 16pi^2 +- 4pi i} with conjugate pairing",
        paired && err.is_some_and(|e| e < 1e-8),
        format!("{}; max rel err {err:?}", describe(&found)),
    );
}

#[test]
fn c05_transformed_determinant_identity() {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    let mut worst_integrated: f64 = 0.0;
    let tol = ToleranceSettings::default();
    for _ in 0..5 {
        let spec = DeSpec::new(-r.gen_range(0.2..3.0), r.gen_range(-10.0..10.0)).unwrap();
        let p = spec.problem();
        for k in 0..200 {
            let lambda = disk_point(&mut r, 1e4);
            let d = delta(&p, lambda, tol).unwrap();
            let t = de_delta_tilde(spec, spec.u_of_lambda(lambda));
            worst = worst.max((d - t).norm() / (1.0 + d.norm()));
            // A sample of the same points through the adaptive integrator.
            if k % 20 == 0 {
                let (di, _) = delta_with_prime_using(&p, lambda, tol, Backend::Integrator).unwrap();
                worst_integrated = worst_integrated.max((di - t).norm() / (1.0 + di.norm()));
            }
        }
    }
    verdict(
        "5",
        "|Delta(l) - Delta~(-l/b0 - q)| < 1e-8 (1 + |Delta|) at 1000 points",
        worst < 1e-8 && worst_integrated < 1e-8,
        format!("max scaled gap {worst:.2e}; integrator subset {worst_integrated:.2e}"),
    );
}

#[test]
fn c06_spectral_gap_sweep() {
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    let breakpoint = 4.0 * 3f64.sqrt() * PI;
    let (mut below, mut above) = (0, 0);
    for k in 0..20 {
        let b1 = 40.0 * k as f64 / 19.0;
        let spec = DeSpec::new(-1.0, b1).unwrap();
        let h = 4.0 * PI * b1 + 20.0;
        let found = spectral_gap(&spec.problem(), &region(1.0, 170.0, -h, h), &SearchOptions::default()).unwrap();
        let err = (found - de_gap(spec)).abs();
        if err > worst {
            worst = err;
            details = vec![format!("worst at b1 = {b1:.3}")];
        }
        if b1 < breakpoint {
            below += 1;
        } else {
            above += 1;
        }
    }
    verdict(
        "6",
        "search gap matches closed form for 20 drifts in [0,40]",
        worst < 1e-6 && below > 0 && above > 0,
        format!(
            "max abs err {worst:.2e}, {below} below and {above} above 4 sqrt3 pi; {}",
            details.join("")
        ),
    );
}

#[test]
fn c07_zero_is_always_an_eigenvalue() {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = random_problem(&mut r);
        worst = worst.max(
            delta(&p, C::new(0.0, 0.0), ToleranceSettings::default())
                .unwrap()
                .norm(),
        );
    }
    verdict(
        "7",
        "|Delta(0)| < 1e-10 on 50 random problems",
        worst < 1e-10,
        format!("max |Delta(0)| {worst:.2e}"),
    );
}

/// `x^2 (1 - x)^2` and its first two derivatives.
fn bump(x: f64) -> (f64, f64, f64) {
    let q = x * x * (1.0 - x) * (1.0 - x);
    let dq = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    let d2q = 2.0 - 12.0 * x + 12.0 * x * x;
    (q, dq, d2q)
}

/// A function in the domain of the nonlocal operator: `bump + αx + βx² + c`
/// with α, β chosen so both boundary conditions hold.
fn domain_function(p: &Problem, c: f64) -> Option<impl Fn(f64) -> (f64, f64, f64)> {
    let moments = |nu: &nonlocal_spectrum::problem::BoundaryMeasure| -> (f64, f64, f64) {
        nu.quadrature_nodes().iter().fold((0.0, 0.0, 0.0), |acc, &(x, w)| {
            (acc.0 + w * x, acc.1 + w * x * x, acc.2 + w * bump(x).0)
        })
    };
    let (m1a, m2a, qa) = moments(p.nu0());
    let (m1b, m2b, qb) = moments(p.nu1());
    // u(0) = ∫u dν0:  α m1a + β m2a = -qa
    // u(1) = ∫u dν1:  α (1 - m1b) + β (1 - m2b) = qb
    let det = m1a * (1.0 - m2b) - m2a * (1.0 - m1b);
    if det.abs() < 1e-3 {
        return None;
    }
    let alpha = (-qa * (1.0 - m2b) - m2a * qb) / det;
    let beta = (m1a * qb + qa * (1.0 - m1b)) / det;
    Some(move |x: f64| {
        let (q, dq, d2q) = bump(x);
        (
            q + alpha * x + beta * x * x + c,
            dq + alpha + 2.0 * beta * x,
            d2q + 2.0 * beta,
        )
    })
}

/// `n` uniform nodes plus both sides of every interior coefficient breakpoint,
/// flagged `true` for the left-limit copy.
fn jump_mesh(p: &Problem, n: usize) -> Vec<(f64, bool)> {
    let mut breaks: Vec<f64> = p
        .b0()
        .breakpoints()
        .iter()
        .chain(p.b1().breakpoints())
        .copied()
        .collect();
    breaks.retain(|&b| b > 0.0 && b < 1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut mesh: Vec<(f64, bool)> = SampledFunction::uniform_nodes(n)
        .into_iter()
        .filter(|x| !breaks.contains(x))
        .map(|x| (x, false))
        .collect();
    mesh.extend(breaks.iter().flat_map(|&b| [(b, true), (b, false)]));
    mesh.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    mesh
}

#[test]
fn c08_resolvent_contract() {
    let mut r = rng(8);
    let tol = ToleranceSettings::new(1e-12, 1e-14);
    let (mut res_eq, mut res_bc, mut res_left, mut res_right): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    let mut cases = 0;
    while cases < 10 {
        let p = random_problem(&mut r);
        let lambda = C::new(r.gen_range(-60.0..60.0), r.gen_range(-40.0..40.0));
        let cm = nonlocal_spectrum::characteristic::char_matrix(&p, lambda, tol).unwrap();
        let scale = (cm.m[0][0] * cm.m[1][1]).norm() + (cm.m[0][1] * cm.m[1][0]).norm();
        if cm.det().norm() < 1e-3 * scale {
            continue;
        }
        let Some(u0) = domain_function(&p, r.gen_range(-1.0..1.0)) else {
            continue;
        };
        cases += 1;
        let (k1, k2, c) = (r.gen_range(1.0..6.0), r.gen_range(1.0..6.0), r.gen_range(-1.0..1.0));
        let f = SampledFunction::from_fn(513, |x| C::new((k1 * x).sin() + c, (k2 * x).cos() * x)).unwrap();

        // Right inverse: (L - λ) R f = f with the boundary conditions.
        let u = resolvent_apply(&p, lambda, &f, tol).unwrap();
        res_eq = res_eq.max(differential_residual(&p, lambda, &u, &f).unwrap());
        let (bc0, bc1) = boundary_residuals(&p, &u).unwrap();
        res_bc = res_bc.max(bc0.norm()).max(bc1.norm());
        res_right = res_right.max(differential_residual(&p, lambda, &u, &f).unwrap() / f.max_norm());

        // Left inverse: R (L - λ) u0 = u0 for u0 in the domain.
        // The forcing jumps where the coefficients do, so those points carry
        // a left and a right sample.
        let mesh = jump_mesh(&p, 513);
        let values = mesh
            .iter()
            .map(|&(x, left)| {
                let (v, d1, d2) = u0(x);
                let at = if left { x.next_down() } else { x };
                let b0 = p.b0().eval(at).unwrap();
                let b1 = p.b1().eval(at).unwrap();
                C::new(b0 * d2 + b1 * d1, 0.0) - lambda * v
            })
            .collect();
        let lu0 = SampledFunction::new(mesh.iter().map(|m| m.0).collect(), values).unwrap();
        let back = resolvent_apply(&p, lambda, &lu0, tol).unwrap();
        let scale = back.nodes().iter().map(|&x| u0(x).0.abs()).fold(1.0, f64::max);
        for (&x, v) in back.nodes().iter().zip(back.values()) {
            res_left = res_left.max((v - u0(x).0).norm() / scale);
        }
    }
    verdict(
        "8",
        "resolvent: equation < 1e-6, boundary conditions < 1e-8, both inverses < 1e-6 on 10 cases",
        res_eq < 1e-6 && res_bc < 1e-8 && res_left < 1e-6 && res_right < 1e-6,
        format!("equation {res_eq:.2e}, boundary {res_bc:.2e}, left {res_left:.2e}, right {res_right:.2e}"),
    );
}

struct BasisComparison {
    absolute: f64,
    scaled: f64,
    derivative: f64,
}

fn compare_basis(b0: f64, b1: f64, lambda: C) -> BasisComparison {
    let tol = ToleranceSettings::default();
    let p = Problem::constant_with_dirac(b0, b1, 0.5);
    let basis = integrate_basis(&p, lambda, tol).unwrap();
    let h = 1e-5 * (1.0 + lambda.norm());
    let up = integrate_basis(&p, lambda + h, tol).unwrap();
    let dn = integrate_basis(&p, lambda - h, tol).unwrap();
    let mut err = [0.0f64; 8];
    let mut size = [0.0f64; 8];
    let mut fd_err = [0.0f64; 4];
    let mut dl_size = [0.0f64; 4];
    for k in 0..=100 {
        let x = k as f64 / 100.0;
        let num = basis.eval(x).unwrap().to_array();
        let exact = closed_form_basis(b0, b1, lambda, x).unwrap().to_array();
        for i in 0..8 {
            err[i] = err[i].max((num[i] - exact[i]).norm());
            size[i] = size[i].max(exact[i].norm());
        }
        let (u, d): (BasisPoint, BasisPoint) = (up.eval(x).unwrap(), dn.eval(x).unwrap());
        let (u, d) = (u.to_array(), d.to_array());
        for i in 0..4 {
            let fd = (u[i] - d[i]) / (2.0 * h);
            fd_err[i] = fd_err[i].max((fd - num[4 + i]).norm());
            dl_size[i] = dl_size[i].max(num[4 + i].norm());
        }
    }
    BasisComparison {
        absolute: err.iter().copied().fold(0.0, f64::max),
        scaled: (0..8).map(|i| err[i] / size[i].max(1.0)).fold(0.0, f64::max),
        derivative: (0..4).map(|i| fd_err[i] / dl_size[i]).fold(0.0, f64::max),
    }
}

fn basis_sweep() -> Vec<BasisComparison> {
    let mut r = rng(9);
    (0..100)
        .map(|k| {
            let (b0, b1) = if k % 2 == 0 {
                (-1.0, 0.0)
            } else {
                (-r.gen_range(0.5..2.0), r.gen_range(-5.0..5.0))
            };
            compare_basis(b0, b1, disk_point(&mut r, 1e4))
        })
        .collect()
}

/// Checked exactly as stated (absolute discrepancy): expected to fail, see `c09b`.
#[test]
fn c09_basis_absolute_discrepancy_as_stated() {
    let sweep = basis_sweep();
    let absolute = sweep.iter().map(|c| c.absolute).fold(0.0, f64::max);
    let derivative = sweep.iter().map(|c| c.derivative).fold(0.0, f64::max);
    let failing = sweep.iter().filter(|c| c.absolute >= 1e-8).count();
    verdict(
        "9",
        "integrated vs exact basis < 1e-8 absolute and d/dl vs differences < 1e-6, 100 l with |l| <= 1e4",
        absolute < 1e-8 && derivative < 1e-6,
        format!("max abs {absolute:.2e} ({failing}/100 over), derivative rel {derivative:.2e}"),
    );
}

#[test]
fn c09b_basis_discrepancy_relative_to_solution_size() {
    let sweep = basis_sweep();
    let scaled = sweep.iter().map(|c| c.scaled).fold(0.0, f64::max);
    let derivative = sweep.iter().map(|c| c.derivative).fold(0.0, f64::max);
    verdict(
        "9b",
        "integrated vs exact basis < 1e-8 relative to each component's size, d/dl vs differences < 1e-6",
        scaled < 1e-8 && derivative < 1e-6,
        format!("max scaled {scaled:.2e}, derivative rel {derivative:.2e}"),
    );
}

#[test]
fn c10_counts_are_additive() {
    let mut r = rng(10);
    let p = DexinSpec::new(0.5).unwrap().problem();
    let opts = SearchOptions::default();
    let mut mismatches = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut total_zeros = 0;
    for _ in 0..50 {
        let re0 = r.gen_range(-50.0..450.0);
        let im0 = r.gen_range(-30.0..10.0);
        let reg = region(re0, re0 + r.gen_range(5.0..200.0), im0, im0 + r.gen_range(2.0..40.0));
        let mut count = |b: &ContourRegion| {
            let zc = count_zeros_detailed(&p, b, &opts).unwrap();
            worst_residual = worst_residual.max(zc.residual);
            zc.count
        };
        let whole = count(&reg);
        total_zeros += whole;
        let xm = reg.re_min + r.gen_range(0.3..0.7) * reg.width();
        let ym = reg.im_min + r.gen_range(0.3..0.7) * reg.height();
        let halves = count(&ContourRegion { re_max: xm, ..reg }) + count(&ContourRegion { re_min: xm, ..reg });
        let quarters = count(&region(reg.re_min, xm, reg.im_min, ym))
            + count(&region(xm, reg.re_max, reg.im_min, ym))
            + count(&region(reg.re_min, xm, ym, reg.im_max))
            + count(&region(xm, reg.re_max, ym, reg.im_max));
        if whole != halves || whole != quarters {
            mismatches.push(format!("{reg}: {whole} vs {halves} vs {quarters}"));
        }
    }
    verdict(
        "10",
        "counts additive under 2x and 4x splits on 50 regions, winding residuals < 1e-3",
        mismatches.is_empty() && worst_residual < 1e-3,
        format!(
            "{total_zeros} zeros in total, max residual {worst_residual:.2e}, mismatches {:?}",
            mismatches
        ),
    );
}
