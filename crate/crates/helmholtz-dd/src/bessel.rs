//! Bessel function of the first kind, order zero.
//!
//! Power series below `x = 8`, Hankel asymptotic form with rational
//! approximations of the modulus/phase functions above (coefficients from
//! the public-domain Cephes library). Absolute error stays below 1e-10
//! over the whole range, a few ulps in most of it.

use std::f64::consts::FRAC_PI_4;

const SQRT_2_OVER_PI: f64 = 0.7978845608028654;

/// Coefficients highest-degree first.
fn polevl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Like [`polevl`] with an implicit leading coefficient of 1.
fn p1evl(x: f64, coef: &[f64]) -> f64 {
    coef.iter().fold(1.0, |acc, &c| acc * x + c)
}

static PP: [f64; 7] = [
    7.96936729297347051624e-4,
    8.28352392107440799803e-2,
    1.23953371646414299388,
    5.44725003058768775090,
    8.74716500199817011941,
    5.30324038235394892183,
    9.99999999999999997821e-1,
];

static PQ: [f64; 7] = [
    9.24408810558863637013e-4,
    8.56288474354474431428e-2,
    1.25352743901058953537,
    5.47097740330417105182,
    8.76190883237069594232,
    5.30605288235394617618,
    1.00000000000000000218,
];

static QP: [f64; 8] = [
    -1.13663838898469149931e-2,
    -1.28252718670509318512,
    -1.95539544257735972385e1,
    -9.32060152123768231369e1,
    -1.77681167980488790968e2,
    -1.47077505154951170175e2,
    -5.14105326766599330220e1,
    -6.05014350600728481186,
];

static QQ: [f64; 7] = [
    6.43178256118178023184e1,
    8.56430025976980587198e2,
    3.88240183605401609683e3,
    7.24046774195652478189e3,
    5.93072701187316984827e3,
    2.06209331660327847417e3,
    2.42005740240291393179e2,
];

/// `J_0(x)` for `x >= 0`.
pub fn bessel_j0(x: f64) -> f64 {
    debug_assert!(x >= 0.0, "bessel_j0 takes nonnegative arguments");
    if x < 8.0 {
        // sum_m (-z)^m / (m!)^2 with z = x^2/4
        let z = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..=48u32 {
            term *= -z / ((m * m) as f64);
            sum += term;
            if term.abs() < 1e-19 {
                break;
            }
        }
        sum
    } else {
        let w = 5.0 / x;
        let z = 25.0 / (x * x);
        let p = polevl(z, &PP) / polevl(z, &PQ);
        let q = polevl(z, &QP) / p1evl(z, &QQ);
        let xn = x - FRAC_PI_4;
        (p * xn.cos() - w * q * xn.sin()) * SQRT_2_OVER_PI / x.sqrt()
    }
}
