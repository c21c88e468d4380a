//! Float helpers usable without `std` (backed by libm).

#[inline(always)]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline(always)]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline(always)]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline(always)]
pub fn max(a: f64, b: f64) -> f64 {
    if a > b || b.is_nan() {
        a
    } else {
        b
    }
}

#[inline(always)]
pub fn min(a: f64, b: f64) -> f64 {
    if a < b || b.is_nan() {
        a
    } else {
        b
    }
}

/// Fourth-order Taylor polynomial of `exp`. Accurate to ~|x|^5/120; callers
/// keep |x| small and refresh with the exact `exp` periodically.
#[inline(always)]
pub fn exp_taylor4(x: f64) -> f64 {
    1.0 + x * (1.0 + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0))))
}
