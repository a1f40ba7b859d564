//! Transcendental float functions for `no_std` builds, routed through libm.
//!
//! Keeping every `exp`/`ln`/`sqrt` call on the libm path (rather than the
//! platform intrinsics std would use) makes results reproducible across
//! targets.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Integer power by binary exponentiation; exact products, no pow() rounding.
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    if n < 0 {
        return 1.0 / powi(x, -n);
    }
    let mut base = x;
    let mut e = n as u32;
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powi_matches_repeated_multiplication() {
        let mut acc = 1.0;
        for k in 0..=12 {
            assert!((powi(1.1, k) - acc).abs() < 1e-12 * acc.max(1.0));
            acc *= 1.1;
        }
        assert!((powi(2.0, -3) - 0.125).abs() < 1e-15);
    }
}
