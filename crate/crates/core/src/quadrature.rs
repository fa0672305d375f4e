//! Gauss–Legendre and Gauss–Kronrod rules.

use num_complex::Complex64;

/// 7-point Gauss–Legendre nodes on [-1, 1].
pub const GL7_NODES: [f64; 7] = [
    -0.949_107_912_342_758_5,
    -0.741_531_185_599_394_4,
    -0.405_845_151_377_397_2,
    0.0,
    0.405_845_151_377_397_2,
    0.741_531_185_599_394_4,
    0.949_107_912_342_758_5,
];

/// Weights matching [`GL7_NODES`].
pub const GL7_WEIGHTS: [f64; 7] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_9,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

/// Maps the 7-point rule onto `[a, b]`, returning `(node, weight)` pairs.
pub fn gauss_legendre_7(a: f64, b: f64) -> [(f64, f64); 7] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    std::array::from_fn(|i| (mid + half * GL7_NODES[i], half * GL7_WEIGHTS[i]))
}

// Kronrod abscissae (positive half, descending) and weights, QUADPACK qk15.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 Kronrod nodes on `[a, b]` in ascending order.
pub fn kronrod_nodes(a: f64, b: f64) -> [f64; 15] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    std::array::from_fn(|i| {
        if i < 7 {
            mid - half * XGK[i]
        } else if i == 7 {
            mid
        } else {
            mid + half * XGK[14 - i]
        }
    })
}

/// Combines integrand values at [`kronrod_nodes`] into `(kronrod, |kronrod - gauss|)`.
pub fn kronrod_combine(a: f64, b: f64, values: &[Complex64; 15]) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mut kron = values[7] * WGK[7];
    let mut gauss = values[7] * WG[3];
    for j in 0..7 {
        let pair = values[j] + values[14 - j];
        kron += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    (kron, (kron - gauss).norm())
}

/// Globally adaptive Gauss–Kronrod integration of a complex integrand.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate falls below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_intervals: usize) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let rule = |lo: f64, hi: f64| {
        let nodes = kronrod_nodes(lo, hi);
        let vals: [Complex64; 15] = std::array::from_fn(|i| f(nodes[i]));
        let (v, e) = kronrod_combine(lo, hi, &vals);
        (lo, hi, v, e)
    };
    let mut parts = vec![rule(a, b)];
    loop {
        let total: Complex64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) || parts.len() >= max_intervals {
            return (total, err);
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        parts.push(rule(lo, mid));
        parts.push(rule(mid, hi));
    }
}

/// Real-valued convenience wrapper around [`integrate_adaptive`].
pub fn integrate_real<F>(f: F, a: f64, b: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return 0.0;
    }
    integrate_adaptive(|x| Complex64::new(f(x), 0.0), a, b, 1e-300, rel_tol, 2000)
        .0
        .re
}
