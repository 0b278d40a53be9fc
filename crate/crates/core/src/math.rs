//! Scalar math helpers on top of `libm`.
//!
//! The crate is `no_std`, so the `f64` intrinsic methods from `std` are not
//! available; everything routes through `libm`.

/// Gaussian right-tail probability `Q(x) = Pr{N(0,1) > x}`.
#[inline]
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// Standard normal CDF `Phi(x) = 1 - Q(x)`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Binomial coefficient C(n, k) in f64-safe integer range.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_function_reference_points() {
        assert!((gaussian_q(0.0) - 0.5).abs() < 1e-15);
        // Q(2) from standard normal tables.
        assert!((gaussian_q(2.0) - 0.022750131948179).abs() < 1e-12);
        assert!(gaussian_q(40.0) < 1e-300);
        assert!((normal_cdf(1.0) - 0.841344746068543).abs() < 1e-12);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(binomial(12, 4), 495);
        assert_eq!(binomial(3, 5), 0);
    }
}
