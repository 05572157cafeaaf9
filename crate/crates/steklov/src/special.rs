//! Shared scalar functions: sinc, central B-splines, binomial coefficients.

use std::f64::consts::PI;

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Binomial coefficient `C(n, k)` as a float (exact for the small orders
/// used here).
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Central B-spline of order `n ≥ 1`:
/// `M_n(x) = 1/(n-1)! Σ_{j=0}^n (-1)^j C(n,j) (n/2 + x - j)_+^{n-1}`,
/// supported in `[-n/2, n/2]`.
///
/// For `n = 1` the truncated power `(t)_+^0` is taken as `1` for `t > 0` and
/// `0` otherwise, which makes `M_1` the indicator of a half-open unit
/// interval; with that convention the integer translates of `M_1` sum to `1`
/// everywhere, including at the jump points.
pub fn central_bspline(n: u32, x: f64) -> f64 {
    assert!(n >= 1, "B-spline order must be >= 1");
    let half = n as f64 / 2.0;
    if x <= -half || x >= half {
        // Closed-support orders (n >= 2) vanish at the endpoints anyway;
        // for n = 1 this pins the half-open convention on the left end.
        if !(n == 1 && x == half) {
            return 0.0;
        }
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 0..=n {
        let t = half + x - j as f64;
        if t > 0.0 {
            sum += sign * binomial(n, j) * t.powi(n as i32 - 1);
        }
        sign = -sign;
    }
    sum / factorial(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert_abs_diff_eq!(sinc(0.5), 2.0 / PI, epsilon = 1e-15);
        assert!(sinc(1.0).abs() < 1e-15);
        assert!(sinc(3.0).abs() < 1e-15);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 5), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn hat_spline_values() {
        // M_2 is the hat on [-1, 1].
        assert_abs_diff_eq!(central_bspline(2, 0.0), 1.0, epsilon = 1e-15);
        assert_eq!(central_bspline(2, 1.0), 0.0);
        assert_eq!(central_bspline(2, -1.0), 0.0);
        assert_eq!(central_bspline(2, 2.0), 0.0);
        assert_abs_diff_eq!(central_bspline(2, 0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn indicator_spline_partition_of_unity() {
        // Half-open convention: translates of M_1 sum to exactly 1,
        // including at half-integers.
        for &u in &[0.0, 0.25, 0.5, 0.75, 1.0, -0.5] {
            let s: f64 = (-3..=3).map(|k| central_bspline(1, u - k as f64)).sum();
            assert_eq!(s, 1.0, "u = {u}");
        }
    }

    #[test]
    fn quartic_spline_center() {
        // M_4(0) = 2/3.
        assert_abs_diff_eq!(central_bspline(4, 0.0), 2.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn spline_translates_sum_to_one() {
        for n in 2..=5u32 {
            for i in 0..=20 {
                let u = i as f64 / 20.0;
                let s: f64 = (-6..=6).map(|k| central_bspline(n, u - k as f64)).sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }
}
