use statrs::function::erf::erfc;

use super::encoding::EncodedPoint;
use super::surrogate::GaussianProcess;

/// Posterior deviations below this are treated as exact.
pub const MIN_SIGMA: f64 = 1e-9;

pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn standard_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement over `best` of a Gaussian with mean `mu` and
/// deviation `sigma`, for maximization.
pub fn expected_improvement_from(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma < MIN_SIGMA {
        return (mu - best).max(0.0);
    }
    let z = (mu - best) / sigma;
    ((mu - best) * standard_normal_cdf(z) + sigma * standard_normal_pdf(z)).max(0.0)
}

pub fn expected_improvement(gp: &GaussianProcess, x: &EncodedPoint, best: f64) -> f64 {
    let (mu, var) = gp.predict(x);
    expected_improvement_from(mu, var.sqrt(), best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normal_reference_values() {
        assert!((standard_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((standard_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-10);
        assert!((standard_normal_cdf(-1.959_963_984_540_054) - 0.025).abs() < 1e-10);
        assert!((standard_normal_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn closed_form_at_mean_equal_best() {
        // EI(mu = best) = sigma * phi(0)
        assert!((expected_improvement_from(0.5, 0.2, 0.5) - 0.2 * 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sigma() {
        assert_eq!(expected_improvement_from(0.7, 0.0, 0.5), 0.7 - 0.5);
        assert_eq!(expected_improvement_from(0.3, 1e-12, 0.5), 0.0);
    }

    /// Monte-Carlo oracle for the integral definition E[max(0, Y - best)].
    #[test]
    fn agrees_with_numerical_integration() {
        let (mu, sigma, best) = (0.42, 0.13, 0.5);
        let steps = 200_000;
        let (lo, hi) = (mu - 10.0 * sigma, mu + 10.0 * sigma);
        let h = (hi - lo) / steps as f64;
        let integral: f64 = (0..steps)
            .map(|i| {
                let y = lo + (i as f64 + 0.5) * h;
                (y - best).max(0.0) * standard_normal_pdf((y - mu) / sigma) / sigma * h
            })
            .sum();
        assert!((expected_improvement_from(mu, sigma, best) - integral).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn nonnegative_and_monotone(mu in -2.0f64..2.0, sigma in 0.0f64..2.0, best in -2.0f64..2.0, d in 0.0f64..1.0) {
            let ei = expected_improvement_from(mu, sigma, best);
            prop_assert!(ei >= 0.0);
            prop_assert!(expected_improvement_from(mu + d, sigma, best) >= ei - 1e-12);
            if sigma >= MIN_SIGMA {
                prop_assert!(expected_improvement_from(mu, sigma + d, best) >= ei - 1e-12);
            }
        }
    }
}
