//! Small numerical helpers shared across modules: the standard normal
//! distribution, adaptive quadrature and bracketed bisection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{PersuasionError, Result};

fn standard() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Standard normal CDF, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function 1 - Φ(x).
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // One Halley step on top of the library inverse brings the error down
    // to rounding level.
    let x = standard().inverse_cdf(p);
    let e = norm_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Upper-tail critical value z_a with 1 - Φ(z_a) = a.
pub fn z_upper(a: f64) -> f64 {
    -norm_quantile(a)
}

/// Density via statrs, used to cross-check the closed form in tests.
pub fn norm_pdf_statrs(x: f64) -> f64 {
    standard().pdf(x)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection for a root of a function with a sign change on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, ftol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(PersuasionError::RootFinding("no sign change on bracket"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid.abs() <= ftol || hi - lo < 1e-15 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Trapezoidal rule over tabulated points.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Independent random stream for replicate `index` under a master seed, so
/// results do not depend on the order in which replicates are scheduled.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cdf_and_quantile_round_trip() {
        for &p in &[1e-8, 0.001, 0.1, 0.5, 0.8, 0.999] {
            assert_abs_diff_eq!(norm_cdf(norm_quantile(p)), p, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(z_upper(0.1), 1.2815515655446004, epsilon = 1e-9);
        assert_abs_diff_eq!(z_upper(0.2), 0.8416212335729143, epsilon = 1e-9);
    }

    #[test]
    fn pdf_matches_statrs() {
        for i in -40..=40 {
            let x = i as f64 * 0.2;
            assert_abs_diff_eq!(norm_pdf(x), norm_pdf_statrs(x), epsilon = 1e-15);
        }
    }

    #[test]
    fn tails_stay_accurate() {
        assert!(norm_cdf(-30.0) > 0.0);
        assert_abs_diff_eq!(norm_sf(30.0), norm_cdf(-30.0), epsilon = 1e-300);
    }

    #[test]
    fn simpson_integrates_smooth_functions() {
        assert_abs_diff_eq!(
            integrate(|x| x * x, 0.0, 1.0, 1e-12),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(integrate(norm_pdf, -8.0, 8.0, 1e-12), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-12);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn replicate_streams_differ_and_repeat() {
        use rand::Rng;
        let a: u64 = replicate_rng(9, 0).gen();
        let b: u64 = replicate_rng(9, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, replicate_rng(9, 0).gen::<u64>());
    }

    #[test]
    fn trapezoid_exact_on_lines() {
        let x: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        assert_abs_diff_eq!(trapezoid(&x, &x), 0.5, epsilon = 1e-12);
    }
}
