//! Invariants over randomly generated problems.

use nonlocal_spectrum::characteristic::{delta, delta_with_prime, delta_with_prime_using};
use nonlocal_spectrum::io::{parse_problem, problem_to_value, to_json_string};
use nonlocal_spectrum::ode::{Backend, ToleranceSettings};
use nonlocal_spectrum::oracles::DexinSpec;
use nonlocal_spectrum::problem::{Coefficient, Problem};
use nonlocal_spectrum::region::ContourRegion;
use nonlocal_spectrum::resolvent::{boundary_residuals, differential_residual, resolvent_apply, SampledFunction};
use nonlocal_spectrum::rootfinder::{count_zeros, SearchOptions};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use crate::support::{random_measure, random_problem, rng, C};

fn tol() -> ToleranceSettings {
    ToleranceSettings::new(1e-12, 1e-14)
}

fn problem_from(seed: u64) -> Problem {
    random_problem(&mut rng(seed))
}

fn lambda() -> impl Strategy<Value = C> {
    (-200.0..200.0f64, -200.0..200.0f64).prop_map(|(re, im)| C::new(re, im))
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x6e6c_7370),
        ..ProptestConfig::default()
    }
}

/// Uniform within every coefficient piece, about 512 intervals per unit
/// length and at least 8 per piece, so that derivative stencils fit in pieces
/// narrower than the overall spacing.
fn resolving_mesh(p: &Problem) -> Vec<f64> {
    let mut breaks: Vec<f64> = p
        .b0()
        .breakpoints()
        .iter()
        .chain(p.b1().breakpoints())
        .copied()
        .collect();
    breaks.extend([0.0, 1.0]);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut nodes = vec![0.0];
    for w in breaks.windows(2) {
        let m = ((512.0 * (w[1] - w[0])).ceil() as usize).max(8);
        nodes.extend((1..=m).map(|i| {
            if i == m {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * i as f64 / m as f64
            }
        }));
    }
    nodes
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn delta_is_conjugate_symmetric(seed in any::<u64>(), l in lambda()) {
        let p = problem_from(seed);
        let d = delta(&p, l, tol()).unwrap();
        let dc = delta(&p, l.conj(), tol()).unwrap();
        prop_assert!((dc - d.conj()).norm() <= 1e-8 * (1.0 + d.norm()), "{d} vs {dc}");
    }

    #[test]
    fn delta_prime_matches_differences(seed in any::<u64>(), l in lambda()) {
        let p = problem_from(seed);
        let (_, dp) = delta_with_prime(&p, l, tol()).unwrap();
        let h = 1e-4 * (1.0 + l.norm());
        let up = delta(&p, l + h, tol()).unwrap();
        let dn = delta(&p, l - h, tol()).unwrap();
        let fd = (up - dn) / (2.0 * h);
        let scale = dp.norm() + (up.norm() + dn.norm()) / h;
        prop_assert!((fd - dp).norm() <= 1e-5 * scale, "{dp} vs {fd}");
    }

    #[test]
    fn fast_path_agrees_with_integrator(b0 in -3.0..-0.3f64, b1 in -5.0..5.0f64, seed in any::<u64>(), l in lambda()) {
        let mut r = rng(seed);
        let p = Problem::new(
            Coefficient::constant(b0),
            Coefficient::constant(b1),
            random_measure(&mut r, false),
            random_measure(&mut r, true),
        );
        prop_assume!(p.validate().is_valid());
        let (d, dp) = delta_with_prime_using(&p, l, tol(), Backend::Auto).unwrap();
        let (di, dpi) = delta_with_prime_using(&p, l, tol(), Backend::Integrator).unwrap();
        prop_assert!((d - di).norm() <= 1e-8 * (1.0 + d.norm()), "{d} vs {di}");
        prop_assert!((dp - dpi).norm() <= 1e-7 * (1.0 + dp.norm()), "{dp} vs {dpi}");
    }

    #[test]
    fn rescaling_the_operator_rescales_lambda(b0 in -3.0..-0.3f64, b1 in -5.0..5.0f64, c in 0.2..5.0f64, seed in any::<u64>(), l in lambda()) {
        let mut r = rng(seed);
        let (nu0, nu1) = (random_measure(&mut r, true), random_measure(&mut r, false));
        let p = Problem::new(Coefficient::constant(b0), Coefficient::constant(b1), nu0.clone(), nu1.clone());
        let q = Problem::new(Coefficient::constant(c * b0), Coefficient::constant(c * b1), nu0, nu1);
        prop_assume!(p.validate().is_valid());
        let d = delta(&p, l, tol()).unwrap();
        let dq = delta(&q, c * l, tol()).unwrap();
        prop_assert!((d - dq).norm() <= 1e-9 * (1.0 + d.norm()), "{d} vs {dq}");
    }

    #[test]
    fn problem_json_round_trip(seed in any::<u64>()) {
        let p = problem_from(seed);
        let text = to_json_string(&problem_to_value(&p)).unwrap();
        let back = parse_problem(&text).unwrap().into_valid().unwrap();
        prop_assert_eq!(back.b0(), p.b0());
        prop_assert_eq!(back.b1(), p.b1());
        prop_assert_eq!(back.nu0(), p.nu0());
        prop_assert_eq!(back.nu1(), p.nu1());
    }

    #[test]
    fn resolvent_meets_its_boundary_conditions(seed in any::<u64>(), l in lambda(), k in 0.5..8.0f64) {
        let p = problem_from(seed);
        let nodes = resolving_mesh(&p);
        let values = nodes.iter().map(|&x| C::new((k * x).cos(), x)).collect();
        let f = SampledFunction::new(nodes, values).unwrap();
        // Points on or next to the spectrum are refused, which is correct.
        let Ok(u) = resolvent_apply(&p, l, &f, tol()) else { return Ok(()) };
        let (r0, r1) = boundary_residuals(&p, &u).unwrap();
        prop_assert!(r0.norm().max(r1.norm()) < 1e-8 * (1.0 + u.max_norm()), "boundary {r0} {r1}, max u {:e}", u.max_norm());
        let res = differential_residual(&p, l, &u, &f).unwrap();
        prop_assert!(res < 1e-6 * (1.0 + f.max_norm()), "residual {res:e}");
    }

    #[test]
    fn sampled_csv_round_trip(values in prop::collection::vec((-1e6..1e6f64, -1e6..1e6f64), 4..40)) {
        let n = values.len();
        let f = SampledFunction::new(
            SampledFunction::uniform_nodes(n),
            values.into_iter().map(|(a, b)| C::new(a, b)).collect(),
        ).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, &buf).unwrap();
        prop_assert_eq!(SampledFunction::read_csv(&path).unwrap(), f);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn zero_counts_add_over_a_split(re0 in -20.0..300.0f64, w in 10.0..150.0f64, im0 in -10.0..0.0f64, h in 2.0..20.0f64, t in 0.2..0.8f64) {
        let p = DexinSpec::new(0.5).unwrap().problem();
        let whole = ContourRegion::new(re0, re0 + w, im0, im0 + h).unwrap();
        let cut = re0 + t * w;
        let count = |r: &ContourRegion| count_zeros(&p, r, tol()).unwrap();
        let left = ContourRegion { re_max: cut, ..whole };
        let right = ContourRegion { re_min: cut, ..whole };
        prop_assert_eq!(count(&whole), count(&left) + count(&right));
    }
}

#[test]
fn search_options_default_tolerances() {
    let opts = SearchOptions::default();
    assert!(opts.tol.rtol > 0.0 && opts.tol.atol > 0.0);
}
