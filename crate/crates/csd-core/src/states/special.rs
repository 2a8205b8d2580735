//! Special functions needed by the state builders: physicists' Hermite
//! polynomials, the gamma function, and Bessel functions of the first kind
//! at real (not just integer) order.

use crate::error::{CsdError, Result};

/// Past this the three-term recurrence overflows f64 for x near the classical
/// turning point.
pub const HERMITE_MAX_ORDER: u32 = 60;

/// Physicists' Hermite polynomial H_j(x).
pub fn hermite(j: u32, x: f64) -> Result<f64> {
    if j > HERMITE_MAX_ORDER {
        return Err(CsdError::UnsupportedOrder {
            order: j as f64,
            reason: format!("hermite recurrence limited to j <= {HERMITE_MAX_ORDER}"),
        });
    }
    let mut prev = 1.0; // H_0
    if j == 0 {
        return Ok(prev);
    }
    let mut cur = 2.0 * x; // H_1
    for i in 1..j {
        let next = 2.0 * x * cur - 2.0 * (i as f64) * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

// Lanczos approximation, g = 7, 9 coefficients; relative error < 1e-13 on the
// real axis away from the poles.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: gamma(x) gamma(1-x) = pi / sin(pi x)
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Bessel function of the first kind, real order, by the ascending series
///
///   J_nu(x) = sum_s (-1)^s / (s! Gamma(nu+s+1)) (x/2)^(nu+2s)
///
/// The alternating series loses roughly x/2.3 decimal digits to cancellation,
/// so accuracy degrades past x ~ 20; the well states built here stay below
/// x ~ 12.
pub fn bessel_j(order: f64, x: f64) -> Result<f64> {
    if !(order > -1.0) || !order.is_finite() {
        return Err(CsdError::UnsupportedOrder {
            order,
            reason: "series requires order > -1".into(),
        });
    }
    if !(0.0..=60.0).contains(&x) {
        return Err(CsdError::UnsupportedArgument {
            name: "x",
            value: x,
            reason: "series evaluation restricted to 0 <= x <= 60".into(),
        });
    }
    let half = 0.5 * x;
    let mut term = half.powf(order) / gamma(order + 1.0);
    let neg_q = -half * half;
    let mut sum = term;
    for s in 0..500 {
        term *= neg_q / ((s as f64 + 1.0) * (order + s as f64 + 1.0));
        sum += term;
        if term.abs() < 1e-16 * (sum.abs() + 1e-300) {
            return Ok(sum);
        }
    }
    Err(CsdError::Numerical(format!(
        "bessel_j({order}, {x}) did not converge in 500 terms"
    )))
}

/// n-th positive root of J_order, by sign-change scan plus bisection.
pub fn bessel_j_root(order: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(CsdError::UnsupportedArgument {
            name: "radial_index",
            value: 0.0,
            reason: "root index is 1-based".into(),
        });
    }
    // first root exceeds the order and consecutive roots are > 3 apart, so a
    // 0.05 scan step cannot skip one; past x ~ 30 the alternating series'
    // cancellation noise (~e^x * eps) swamps J ~ x^{-1/2} and sign changes
    // stop meaning anything, so the scan must not go there
    const SCAN_MAX: f64 = 30.0;
    let step = 0.05;
    let mut lo = order.max(1e-9);
    let mut f_lo = bessel_j(order, lo)?;
    let mut found = 0;
    let mut x = lo + step;
    while x <= SCAN_MAX {
        let f_x = bessel_j(order, x)?;
        if f_lo == 0.0 {
            found += 1; // scan landed on a root exactly
            if found == n {
                return Ok(lo);
            }
        } else if f_lo.signum() != f_x.signum() {
            let (mut a, mut b) = (lo, x);
            let mut f_a = f_lo;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let f_mid = bessel_j(order, mid)?;
                if f_a.signum() == f_mid.signum() {
                    a = mid;
                    f_a = f_mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-14 * b.max(1.0) {
                    break;
                }
            }
            found += 1;
            if found == n {
                return Ok(0.5 * (a + b));
            }
        }
        lo = x;
        f_lo = f_x;
        x += step;
    }
    Err(CsdError::Numerical(format!(
        "root {n} of J_{order} not found while scanning ({:.2}, {SCAN_MAX}]; \
         found {found}, last bracket checked ended at {lo:.2}",
        order.max(1e-9)
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite(1, 2.0).unwrap(), 4.0);
        // H_4(x) = 16x^4 - 48x^2 + 12
        assert_eq!(hermite(4, 1.0).unwrap(), -20.0);
        assert_relative_eq!(
            hermite(5, 0.73).unwrap(),
            32.0 * 0.73f64.powi(5) - 160.0 * 0.73f64.powi(3) + 120.0 * 0.73,
            max_relative = 1e-13
        );
        assert!(hermite(61, 0.0).is_err());
    }

    #[test]
    fn gamma_matches_known_values() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(0.5), std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        // Gamma(1/3), reference value from the reflection/duplication identities
        assert_relative_eq!(gamma(1.0 / 3.0), 2.678_938_534_707_747_6, max_relative = 1e-12);
        assert_relative_eq!(gamma(10.5), 1_133_278.388_948_966_2, max_relative = 1e-12);
    }

    #[test]
    fn bessel_j_closed_forms() {
        // first series term is 1/Gamma(1), so exact only up to the Lanczos error
        assert_relative_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0, max_relative = 1e-13);
        assert_eq!(bessel_j(2.5, 0.0).unwrap(), 0.0);
        // J_{1/2}(x) = sqrt(2/(pi x)) sin x
        let x = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(
            bessel_j(0.5, x).unwrap(),
            2.0 / std::f64::consts::PI,
            max_relative = 1e-12
        );
        for x in [0.3, 1.1, 4.0, 9.7] {
            assert_relative_eq!(
                bessel_j(0.5, x).unwrap(),
                (2.0 / (std::f64::consts::PI * x)).sqrt() * x.sin(),
                max_relative = 1e-11
            );
        }
        assert!(bessel_j(-1.0, 1.0).is_err());
        assert!(bessel_j(0.0, -0.1).is_err());
        assert!(bessel_j(0.0, 60.5).is_err());
    }

    #[test]
    fn bessel_roots_match_reference() {
        // j_{0,1}, j_{0,2}, j_{1,1} to 13 digits
        assert_abs_diff_eq!(bessel_j_root(0.0, 1).unwrap(), 2.404_825_557_695_773, epsilon = 1e-10);
        assert_abs_diff_eq!(bessel_j_root(0.0, 2).unwrap(), 5.520_078_110_286_311, epsilon = 1e-10);
        assert_abs_diff_eq!(bessel_j_root(1.0, 1).unwrap(), 3.831_705_970_207_512, epsilon = 1e-10);
        // half-order roots are the zeros of sin: j_{1/2,n} = n pi, exact
        // reference all the way to the scan ceiling; the achievable accuracy
        // shrinks with x because the series noise floor grows like e^x * eps
        for (n, eps) in [(1u32, 1e-10), (2, 1e-10), (3, 1e-10), (9, 1e-4)] {
            assert_abs_diff_eq!(
                bessel_j_root(0.5, n).unwrap(),
                n as f64 * std::f64::consts::PI,
                epsilon = eps
            );
        }
        assert!(bessel_j_root(0.0, 0).is_err());
        assert!(bessel_j_root(0.0, 12).is_err(), "12th root sits beyond the scan ceiling");
    }

    #[test]
    fn bessel_value_at_first_j1_zero_vanishes() {
        let x = 3.831_705_970_207_512;
        assert_abs_diff_eq!(bessel_j(1.0, x).unwrap(), 0.0, epsilon = 1e-8);
    }

    proptest! {
        // at integer order the series terms are 1/(s!(n+s)!); compare against
        // a from-scratch evaluation using exact integer factorials
        #[test]
        fn integer_order_matches_factorial_series(n in 0u32..8, x in 0.0f64..10.0) {
            let mut fact = vec![1.0f64; 40 + n as usize + 1];
            for i in 1..fact.len() {
                fact[i] = fact[i - 1] * i as f64;
            }
            let mut reference = 0.0;
            for s in 0..40usize {
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                reference += sign / (fact[s] * fact[s + n as usize])
                    * (x / 2.0).powi(n as i32 + 2 * s as i32);
            }
            let got = bessel_j(n as f64, x).unwrap();
            prop_assert!((got - reference).abs() <= 1e-12 * reference.abs().max(1.0));
        }

        #[test]
        fn hermite_recurrence_consistency(j in 2u32..20, x in -4.0f64..4.0) {
            // H_{j}' = 2j H_{j-1} checked by central differences
            let h = 1e-5;
            let d = (hermite(j, x + h).unwrap() - hermite(j, x - h).unwrap()) / (2.0 * h);
            let expect = 2.0 * j as f64 * hermite(j - 1, x).unwrap();
            let scale = expect.abs().max(hermite(j, x).unwrap().abs()).max(1.0);
            prop_assert!((d - expect).abs() < 1e-4 * scale);
        }
    }
}
