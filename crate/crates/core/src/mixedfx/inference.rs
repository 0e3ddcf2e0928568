use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Two-sided p-value of `beta / se` against the standard normal.
pub fn wald_test(beta: f64, se: f64) -> Result<f64> {
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("standard error {se} must be positive")));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!("coefficient {beta} is not finite")));
    }
    // 2·(1 − Φ(|z|)) = erfc(|z|/√2), evaluated without cancellation
    let z = libm::fabs(beta / se);
    Ok(libm::erfc(z / core::f64::consts::SQRT_2).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Φ from the Maclaurin series of erf, independent of libm's erfc.
    fn phi_series(x: f64) -> f64 {
        let t = x / core::f64::consts::SQRT_2;
        let mut term = t;
        let mut sum = t;
        let mut n = 0.0;
        while libm::fabs(term) > 1e-18 {
            n += 1.0;
            term *= -t * t / n;
            sum += term / (2.0 * n + 1.0);
        }
        0.5 + sum / libm::sqrt(core::f64::consts::PI)
    }

    #[test]
    fn null_and_known_quantiles() {
        assert_eq!(wald_test(0.0, 1.0).unwrap(), 1.0);
        assert!((wald_test(1.959964, 1.0).unwrap() - 0.05).abs() < 1e-4);
        let p3 = wald_test(3.0, 1.0).unwrap();
        let oracle = 2.0 * (1.0 - phi_series(3.0));
        assert!((oracle - 0.0027).abs() < 1e-4);
        assert!((p3 - oracle).abs() < 1e-12);
        assert_eq!(wald_test(-3.0, 1.0).unwrap(), p3);
    }

    #[test]
    fn cdf_matches_series() {
        for x in [-2.5, -1.0, -0.1, 0.0, 0.3, 1.7, 2.9] {
            assert!((normal_cdf(x) - phi_series(x)).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn rejects_bad_se() {
        assert!(wald_test(1.0, 0.0).is_err());
        assert!(wald_test(1.0, -1.0).is_err());
    }
}
