//! Quadrature helpers for the spectral-density integrals.
//!
//! Everything here is composite-trapezoid based with interval doubling, so
//! results are deterministic for a given input. Tails beyond the frequency
//! cutoff are handled analytically using the known omega^-2 falloff of the
//! Lorentzian noise power.

use std::f64::consts::{FRAC_PI_2, PI};

/// Dimensionless frequency cutoff x = omega * tau_c for Lorentzian integrals.
pub const LORENTZIAN_CUTOFF: f64 = 1.0e3;

/// Internal stopping tolerance for interval doubling. Tighter than the
/// 1e-6 accuracy target so that the stopping heuristic is not itself the
/// dominant error.
const DOUBLING_TOL: f64 = 1.0e-9;

const MAX_DOUBLINGS: usize = 24;

/// Composite trapezoid on a uniform grid, refined by interval doubling
/// until two successive refinements agree within `tol` of scale `scale`.
pub fn trapezoid_uniform<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n0: usize, scale: f64) -> f64 {
    assert!(b > a && n0 >= 2);
    let mut n = n0;
    let mut h = (b - a) / n as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for k in 1..n {
        sum += f(a + k as f64 * h);
    }
    let mut integral = sum * h;
    for _ in 0..MAX_DOUBLINGS {
        // Only the new midpoints need evaluating.
        let mut mid = 0.0;
        for k in 0..n {
            mid += f(a + (k as f64 + 0.5) * h);
        }
        let refined = 0.5 * integral + 0.5 * h * mid;
        n *= 2;
        h *= 0.5;
        let done = (refined - integral).abs() <= DOUBLING_TOL * scale.max(refined.abs());
        integral = refined;
        if done {
            break;
        }
    }
    integral
}

/// Composite trapezoid on a log-spaced grid over `[a, b]`, `a > 0`,
/// implemented as a uniform rule in u = ln x.
pub fn trapezoid_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n0: usize, scale: f64) -> f64 {
    assert!(a > 0.0 && b > a);
    let (ua, ub) = (a.ln(), b.ln());
    trapezoid_uniform(|u| f(u.exp()) * u.exp(), ua, ub, n0, scale)
}

/// Sine integral Si(z) = int_0^z sin(t)/t dt for z >= 0.
///
/// Power series below z = 25, asymptotic auxiliary expansion above. Both
/// branches are accurate to better than 1e-7 absolute, which is all the
/// tail corrections below require.
pub fn sine_integral(z: f64) -> f64 {
    assert!(z >= 0.0);
    if z == 0.0 {
        return 0.0;
    }
    if z <= 25.0 {
        // Si(z) = sum_k (-1)^k z^(2k+1) / ((2k+1) (2k+1)!)
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 0u32;
        loop {
            let m = (2 * k + 1) as f64;
            term *= -z2 * m / ((m + 1.0) * (m + 2.0) * (m + 2.0));
            sum += term;
            k += 1;
            if term.abs() < 1e-17 * sum.abs().max(1.0) || k > 200 {
                break;
            }
        }
        sum
    } else {
        // Si(z) = pi/2 - f(z) cos z - g(z) sin z with asymptotic f, g.
        let zi = 1.0 / z;
        let zi2 = zi * zi;
        let f = zi * (1.0 - 2.0 * zi2 + 24.0 * zi2 * zi2 - 720.0 * zi2 * zi2 * zi2);
        let g = zi2 * (1.0 - 6.0 * zi2 + 120.0 * zi2 * zi2 - 5040.0 * zi2 * zi2 * zi2);
        FRAC_PI_2 - f * z.cos() - g * z.sin()
    }
}

/// Analytic tail of `int_w^inf cos(theta x) / x^2 dx` for `w > 0`,
/// `theta >= 0`: equals cos(w theta)/w - theta (pi/2 - Si(w theta)).
fn cos_over_x2_tail(w: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        return 1.0 / w;
    }
    let z = w * theta;
    (z.cos()) / w - theta * (FRAC_PI_2 - sine_integral(z))
}

/// One-sided integral of the Lorentzian noise power,
/// `int_0^inf 2 d / (1 + x^2 tau^2...) domega` evaluated in the scaled
/// variable x = omega tau_c: returns `(1/tau_c) int_0^inf 2 d/(1+x^2) dx`.
///
/// Head panel [0, 1] on a uniform grid, body [1, cutoff] on a log grid,
/// analytic x^-2 tail beyond the cutoff.
pub fn lorentzian_power_integral(d: f64, tau_c: f64) -> f64 {
    assert!(tau_c > 0.0);
    if d == 0.0 {
        return 0.0;
    }
    let s = |x: f64| 2.0 * d / (1.0 + x * x);
    let w = LORENTZIAN_CUTOFF;
    let head = trapezoid_uniform(s, 0.0, 1.0, 64, 2.0 * d);
    let body = trapezoid_log(s, 1.0, w, 64, 2.0 * d);
    // Match an A/x^2 model at the cutoff and integrate it to infinity.
    let tail = s(w) * w;
    (head + body + tail) / tau_c
}

/// Inverse Fourier cosine transform of the Lorentzian noise power:
/// `(1/pi) int_0^inf S(omega) cos(omega lag) domega` with
/// `S = 2 d / (1 + omega^2 tau_c^2)`.
///
/// The oscillatory body uses a uniform grid fine enough to resolve the
/// phase; the truncated tail is integrated analytically against the
/// x^-2 asymptote of S.
pub fn lorentzian_kernel_roundtrip(d: f64, tau_c: f64, lag: f64) -> f64 {
    assert!(tau_c > 0.0 && lag >= 0.0);
    if d == 0.0 {
        return 0.0;
    }
    let theta = lag / tau_c;
    let s = |x: f64| 2.0 * d / (1.0 + x * x);
    let w = LORENTZIAN_CUTOFF;
    // At least four points per radian of phase, and enough for the
    // smooth factor even when the phase is slow.
    let n0 = 512usize.max((4.0 * w * theta).ceil() as usize);
    let body = trapezoid_uniform(|x| s(x) * (theta * x).cos(), 0.0, w, n0, 2.0 * d);
    let tail = s(w) * w * w * cos_over_x2_tail(w, theta);
    (body + tail) / (PI * tau_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn trapezoid_matches_polynomial() {
        // int_0^2 (3x^2 + 1) dx = 10
        let v = trapezoid_uniform(|x| 3.0 * x * x + 1.0, 0.0, 2.0, 8, 1.0);
        assert_abs_diff_eq!(v, 10.0, epsilon = 1e-8);
    }

    #[test]
    fn log_trapezoid_matches_reciprocal() {
        // int_1^e^3 dx/x = 3, exact on the log grid up to rounding
        let v = trapezoid_log(|x| 1.0 / x, 1.0, (3.0f64).exp(), 8, 1.0);
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn sine_integral_matches_quadrature() {
        // Independent oracle: very fine trapezoid of sin(t)/t.
        for &z in &[0.3, 1.0, 4.0, 10.0, 24.0, 26.0, 80.0, 400.0] {
            let n0 = 4096usize.max((40.0 * z) as usize);
            let oracle = trapezoid_uniform(
                |t| if t == 0.0 { 1.0 } else { t.sin() / t },
                0.0,
                z,
                n0,
                1.0,
            );
            assert_abs_diff_eq!(sine_integral(z), oracle, epsilon = 1e-7);
        }
    }

    #[test]
    fn sine_integral_limit() {
        assert_abs_diff_eq!(sine_integral(1.0e6), FRAC_PI_2, epsilon = 1e-5);
        assert_eq!(sine_integral(0.0), 0.0);
    }

    #[test]
    fn power_integral_matches_arctan() {
        // int_0^inf 2 d/(1+x^2) dx = pi d, so the scaled result is pi d / tau_c.
        for &(d, tau_c) in &[(1.0, 1.0), (3.0, 0.2), (0.7, 15.0)] {
            let v = lorentzian_power_integral(d, tau_c);
            assert_abs_diff_eq!(v, PI * d / tau_c, epsilon = 1e-8 * (d / tau_c));
        }
    }

    #[test]
    fn roundtrip_is_exponential() {
        // (1/pi) int 2/(1+x^2) cos(theta x) dx = e^{-theta}
        for &theta in &[0.0, 0.5, 1.0, 2.5] {
            let v = lorentzian_kernel_roundtrip(1.0, 1.0, theta);
            assert_abs_diff_eq!(v, (-theta).exp(), epsilon = 1e-6);
        }
    }
}
