//! Small numerical kernels: adaptive quadrature, Gaver-Stehfest weights,
//! incomplete gamma for negative parameters, safeguarded Newton, and the
//! two-sample Kolmogorov-Smirnov statistic.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature on a closed interval.
///
/// The integrand must be finite on `[a, b]`; singular endpoints have to be
/// transformed away by the caller.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // Depth 20 bounds the work at ~2^20 panels; integrands that have not
    // converged by then (e.g. numerically inverted transforms with noise
    // at the panel scale) get the best available estimate.
    simpson_rec(f, a, b, fa, fm, fb, whole, rel_tol, 20)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
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
    if depth == 0 || delta.abs() <= 15.0 * rel_tol * (left + right).abs().max(1e-300) {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, rel_tol, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, rel_tol, depth - 1)
    }
}

/// Stehfest weights for an even number of terms.
///
/// All factorials stay below 2^53 for n <= 18, so the weights are exact
/// in double precision up to the final sums.
pub fn stehfest_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "Stehfest term count must be even");
    let half = n / 2;
    let fact = |m: usize| -> f64 { (1..=m).map(|i| i as f64).product() };
    let mut weights = Vec::with_capacity(n);
    for k in 1..=n {
        let mut sum = 0.0;
        for j in k.div_ceil(2)..=k.min(half) {
            let num = (j as f64).powi(half as i32) * fact(2 * j);
            let den = fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k);
            sum += num / den;
        }
        let sign = if (half + k) % 2 == 0 { 1.0 } else { -1.0 };
        weights.push(sign * sum);
    }
    weights
}

/// Gaver-Stehfest inversion of a Laplace transform at `x > 0` using
/// precomputed weights. Only real-axis evaluations of `transform` are needed.
pub fn gaver_stehfest<F: Fn(f64) -> f64>(transform: &F, x: f64, weights: &[f64]) -> f64 {
    let ln2_over_x = std::f64::consts::LN_2 / x;
    let mut sum = 0.0;
    for (k, w) in weights.iter().enumerate() {
        sum += w * transform((k + 1) as f64 * ln2_over_x);
    }
    sum * ln2_over_x
}

/// Upper incomplete gamma Gamma(s, x) for s in (-1, 1], x > 0.
///
/// Negative parameters are reduced to the positive range with
/// Gamma(s, x) = (Gamma(s+1, x) - x^s e^{-x}) / s.
pub fn upper_incomplete_gamma(s: f64, x: f64) -> f64 {
    assert!(x > 0.0 && s > -1.0 && s <= 1.0 && s != 0.0);
    if s > 0.0 {
        statrs::function::gamma::gamma_ur(s, x) * statrs::function::gamma::gamma(s)
    } else {
        (upper_incomplete_gamma(s + 1.0, x) - x.powf(s) * (-x).exp()) / s
    }
}

/// Safeguarded Newton iteration for an increasing function on a bracket.
///
/// `f` must be nondecreasing on `[lo, hi]` with `f(lo) <= target <= f(hi)`.
/// Newton steps use `df`; any step leaving the bracket falls back to
/// bisection. Stops when `|f - target| <= tol`.
pub fn newton_bracketed<F, D>(
    f: &F,
    df: &D,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    context: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx.abs() <= tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d.is_finite() && d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1e-300) {
            return Ok(x);
        }
    }
    let fx = f(x) - target;
    if fx.abs() <= tol * 1e3 {
        // Newton stalled on roundoff but the residual is still tiny.
        return Ok(x);
    }
    Err(Error::Bracketing {
        context,
        lo,
        hi,
        f_lo: f(lo) - target,
        f_hi: f(hi) - target,
    })
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|u, v| u.partial_cmp(v).unwrap());
    b.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Median of a sample (average of middle pair for even lengths).
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Quantile by linear interpolation on the sorted sample, q in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let pos = q * (n - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < n {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_polynomial_is_exact() {
        let v = integrate(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn simpson_handles_decaying_exponential() {
        let v = integrate(&|x: f64| (-x).exp(), 0.0, 40.0, 1e-12);
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn stehfest_weights_invert_known_transforms() {
        let w = stehfest_weights(14);
        // F(s) = 1/s  =>  f(t) = 1
        let one = gaver_stehfest(&|s: f64| 1.0 / s, 1.7, &w);
        assert_relative_eq!(one, 1.0, max_relative = 1e-7);
        // F(s) = 1/s^2  =>  f(t) = t
        let t = gaver_stehfest(&|s: f64| 1.0 / (s * s), 2.3, &w);
        assert_relative_eq!(t, 2.3, max_relative = 2e-6);
        // F(s) = 1/(s+1)  =>  f(t) = e^{-t}
        let e = gaver_stehfest(&|s: f64| 1.0 / (s + 1.0), 1.0, &w);
        assert_relative_eq!(e, (-1.0f64).exp(), max_relative = 1e-7);
    }

    #[test]
    fn upper_gamma_matches_quadrature_for_negative_parameter() {
        // Gamma(-0.5, 2) by direct integration of t^{-3/2} e^{-t}.
        let s = -0.5;
        let x = 2.0;
        let quad = integrate(&|t: f64| t.powf(s - 1.0) * (-t).exp(), x, 60.0, 1e-13);
        assert_relative_eq!(upper_incomplete_gamma(s, x), quad, max_relative = 1e-9);
    }

    #[test]
    fn newton_finds_square_root() {
        let r = newton_bracketed(&|x| x * x, &|x| 2.0 * x, 2.0, 0.0, 2.0, 1e-14, "sqrt").unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, max_relative = 1e-12);
    }

    #[test]
    fn ks_statistic_of_identical_samples_is_zero() {
        let mut a = vec![0.3, 0.1, 0.9];
        let mut b = vec![0.1, 0.9, 0.3];
        assert_eq!(ks_statistic(&mut a, &mut b), 0.0);
    }

    #[test]
    fn ks_statistic_of_disjoint_samples_is_one() {
        let mut a = vec![0.0, 1.0, 2.0];
        let mut b = vec![5.0, 6.0, 7.0];
        assert_eq!(ks_statistic(&mut a, &mut b), 1.0);
    }
}
