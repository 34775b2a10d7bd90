//! Special functions needed by the semiclassical formulas.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Supported range of `t` in [`arg_gamma_half`].
pub const ARG_GAMMA_LIMIT: f64 = 50.0;
/// Supported range of `x` in [`bessel_j0`].
pub const BESSEL_LIMIT: f64 = 1e4;

// B_{2k} / (2k (2k - 1)) for k = 1..=10
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

/// Stirling series for `ln Γ(z)`, valid for `|z| ≳ 15` away from the negative axis.
fn ln_gamma_stirling(z: Complex64) -> Complex64 {
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let mut acc = (z - 0.5) * z.ln() - z + half_ln_2pi;
    let zinv = z.inv();
    let zinv2 = zinv * zinv;
    let mut pow = zinv;
    for c in STIRLING {
        acc += pow * c;
        pow *= zinv2;
    }
    acc
}

/// Imaginary part of `ln Γ(1/2 + i t)` on the branch that is continuous in
/// `t` and vanishes at `t = 0`.
pub fn arg_gamma_half(t: f64) -> Result<f64> {
    if !t.is_finite() || t.abs() > ARG_GAMMA_LIMIT {
        return Err(Error::OutOfRange {
            value: t,
            limit: ARG_GAMMA_LIMIT,
        });
    }
    Ok(arg_gamma_half_unchecked(t))
}

pub(crate) fn arg_gamma_half_unchecked(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    // Γ(z) = Γ(z + K) / Π_{j<K} (z + j); each factor's argument is
    // atan2(t, 1/2 + j), continuous in t.
    const SHIFT: usize = 20;
    let z = Complex64::new(0.5 + SHIFT as f64, t);
    let mut arg = ln_gamma_stirling(z).im;
    for j in 0..SHIFT {
        arg -= t.atan2(0.5 + j as f64);
    }
    arg
}

/// Derivative of [`arg_gamma_half`], i.e. `Re ψ(1/2 + i t)`.
pub fn arg_gamma_half_derivative(t: f64) -> f64 {
    // d/dt Im lnΓ(1/2 + it) = Re ψ(1/2 + it)
    const SHIFT: usize = 20;
    let z = Complex64::new(0.5 + SHIFT as f64, t);
    // ψ(z) ~ ln z - 1/(2z) - Σ B_{2k} / (2k z^{2k})
    let b2k = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let zinv2 = (z * z).inv();
    let mut psi = z.ln() - z.inv() * 0.5;
    let mut pow = zinv2;
    for (k, b) in b2k.iter().enumerate() {
        psi -= pow * (b / (2.0 * (k + 1) as f64));
        pow *= zinv2;
    }
    for j in 0..SHIFT {
        psi -= Complex64::new(0.5 + j as f64, t).inv();
    }
    psi.re
}

/// Bessel function of the first kind of order zero.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > BESSEL_LIMIT {
        return Err(Error::OutOfRange {
            value: x,
            limit: BESSEL_LIMIT,
        });
    }
    Ok(j0_unchecked(x))
}

pub(crate) fn j0_unchecked(x: f64) -> f64 {
    let x = x.abs();
    if x <= 8.0 {
        j0_series(x)
    } else if x < 40.0 {
        j0_miller(x)
    } else {
        j0_hankel(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 4 {
            break;
        }
    }
    sum
}

/// Backward recurrence normalized by `J0 + 2 Σ J_{2k} = 1`.
fn j0_miller(x: f64) -> f64 {
    let start = (x as usize + 40) & !1;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next; // J_{k-1}
        next = cur;
        cur = prev;
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * cur;
        }
        if k == 1 {
            j0 = cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j0;
    j0 / norm
}

/// Hankel asymptotic expansion, accurate to ~1e-16 for `x ≥ 40`.
fn j0_hankel(x: f64) -> f64 {
    let mu = 0.0; // 4 ν²
    let z8 = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..40 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * z8);
        if k % 2 == 1 {
            // odd terms feed Q with alternating sign
            let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
            q += sign * term;
        } else {
            let sign = if (k / 2) % 2 == 1 { -1.0 } else { 1.0 };
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arg_gamma_basics() {
        assert_eq!(arg_gamma_half(0.0).unwrap(), 0.0);
        for &t in &[0.3, 1.0, 7.5, 49.0] {
            let a = arg_gamma_half(t).unwrap();
            let b = arg_gamma_half(-t).unwrap();
            assert!((a + b).abs() < 1e-13);
        }
        assert!(matches!(arg_gamma_half(51.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn arg_gamma_derivative_matches_difference() {
        for &t in &[-3.0, 0.0, 0.4, 2.0] {
            let d = 1e-5;
            let fd = (arg_gamma_half_unchecked(t + d) - arg_gamma_half_unchecked(t - d)) / (2.0 * d);
            assert!((fd - arg_gamma_half_derivative(t)).abs() < 1e-8);
        }
        // ψ(1/2) = -γ - 2 ln 2
        let psi_half = -0.5772156649015329 - 2.0 * 2f64.ln();
        assert!((arg_gamma_half_derivative(0.0) - psi_half).abs() < 1e-13);
    }

    #[test]
    fn j0_basics() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        for &x in &[0.5, 7.9, 8.1, 20.0, 39.9, 40.1, 500.0] {
            assert_eq!(bessel_j0(x).unwrap(), bessel_j0(-x).unwrap());
        }
        assert!(bessel_j0(2.404825557695773).unwrap().abs() < 1e-14);
        assert!(matches!(bessel_j0(2e4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn j0_branches_agree_at_seams() {
        assert!((j0_series(8.0) - j0_miller(8.0)).abs() < 1e-14);
        assert!((j0_miller(40.0) - j0_hankel(40.0)).abs() < 1e-14);
    }
}
