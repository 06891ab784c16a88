//! Bessel function of the first kind of order zero.

use std::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 8.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// `J0(x)` to roughly 1e-14 absolute accuracy for all real `x`.
///
/// Ascending series for `|x| < 8`, Miller backward recurrence up to
/// `|x| = 25` and the Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_LIMIT {
        j0_series(ax)
    } else if ax < ASYMPTOTIC_LIMIT {
        j0_miller(ax)
    } else {
        j0_asymptotic(ax)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Backward recurrence `J_{n-1} = (2n/x) J_n - J_{n+1}` normalised by
/// `J0 + 2 sum J_{2k} = 1`.
fn j0_miller(x: f64) -> f64 {
    let start = 2 * ((x as usize + 30) / 2) + 20;
    let mut jp1 = 0.0;
    let mut j = 1e-300;
    let mut norm = 0.0;
    for n in (1..=start).rev() {
        let jm1 = (2.0 * n as f64 / x) * j - jp1;
        jp1 = j;
        j = jm1;
        if (n - 1) % 2 == 0 && n - 1 > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            norm *= 1e-250;
        }
    }
    j / (norm + j)
}

fn j0_asymptotic(x: f64) -> f64 {
    // P ~ sum (-1)^k a_{2k} / x^{2k}, Q ~ sum (-1)^k a_{2k+1} / x^{2k+1}
    // with a_k = prod_{m=1..k} (2m-1)^2 / (k! 8^k).
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let m = (2 * k - 1) as f64;
        a *= m * m / (k as f64 * 8.0 * x);
        if a >= prev {
            break;
        }
        prev = a;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * a;
        } else {
            p += sign * a;
        }
        if a < 1e-17 {
            break;
        }
    }
    let phase = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * phase.cos() + q * phase.sin())
}

/// Approximate positive zeros of `J0` (McMahon expansion). Accurate to a
/// few 1e-4 for the first zero and far better beyond; intended for panel
/// boundaries, not as exact roots.
pub fn bessel_j0_zero(m: usize) -> f64 {
    let beta = (m as f64 - 0.25) * PI;
    let b8 = 8.0 * beta;
    beta + 1.0 / b8 - 124.0 / (3.0 * b8.powi(3))
}
