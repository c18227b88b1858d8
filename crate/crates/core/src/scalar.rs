//! Floating point abstraction shared by the generic parts of the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the walk machinery is generic over. Implemented for `f32` and `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Send + Sync + 'static
{
    /// Tolerance used when validating unitarity of user supplied coins.
    fn unitarity_tol() -> Self;

    /// Veltkamp splitting constant `2^⌈p/2⌉ + 1`.
    fn splitter() -> Self;

    /// `2π − TAU` in this precision.
    fn tau_lo() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    fn int(x: i64) -> Self {
        <Self as FromPrimitive>::from_i64(x).expect("integer out of range")
    }
}

impl Real for f32 {
    fn unitarity_tol() -> Self {
        2e-6
    }
    fn splitter() -> Self {
        4097.0
    }
    fn tau_lo() -> Self {
        -1.748_455_5e-7
    }
}

impl Real for f64 {
    fn unitarity_tol() -> Self {
        1e-12
    }
    fn splitter() -> Self {
        134_217_729.0
    }
    fn tau_lo() -> Self {
        2.449_293_598_294_706_4e-16
    }
}

pub type C<T> = Complex<T>;

#[inline]
pub fn cis<T: Real>(phi: T) -> C<T> {
    let (s, c) = phi.sin_cos();
    Complex::new(c, s)
}

/// `n·φ` reduced modulo 2π without the rounding error of the raw product.
/// φ is split so that `n·φ_hi` is exact for `|n|` up to about `2^(p/2)`, and
/// the reduction uses a two-term 2π.
pub fn int_angle<T: Real>(n: i64, phi: T) -> T {
    let c = T::splitter() * phi;
    let hi = c - (c - phi);
    let lo = phi - hi;
    let nf = T::int(n);
    let p = nf * hi;
    let k = (p / T::TAU()).round();
    let r = (-k).mul_add(T::TAU(), p);
    r - k * T::tau_lo() + nf * lo
}

/// Reduce an angle to [0, 2π).
pub fn wrap_angle<T: Real>(phi: T) -> T {
    let tau = T::TAU();
    let r = phi % tau;
    if r < T::zero() {
        let r = r + tau;
        if r >= tau { T::zero() } else { r }
    } else {
        r
    }
}

/// Pairwise summation; the split points depend only on the length, so the
/// result is bit-stable for a fixed input order.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= 8 {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of the mean.
pub fn mean_stderr<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::from_usize(xs.len()).unwrap();
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let dev: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - T::one());
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_into_range() {
        let tau = std::f64::consts::TAU;
        assert_eq!(wrap_angle(0.0f64), 0.0);
        assert!((wrap_angle(-0.5f64) - (tau - 0.5)).abs() < 1e-15);
        assert!((wrap_angle(3.0 * tau + 1.0) - 1.0).abs() < 1e-12);
        assert!(wrap_angle(-1e-300f64) < tau);
    }

    #[test]
    fn int_angle_is_accurate() {
        // 10^8 · 0.1 = 10^7 exactly in reals; the double 0.1 is off by 5.55e-18
        let phi = 0.1f64;
        let exact_excess = 1e8 * 5.551115123125783e-18;
        let want = (1e7f64 % std::f64::consts::TAU) + exact_excess;
        let got = wrap_angle(int_angle(100_000_000, phi));
        assert!((got - (want - 2.449_293_598_294_706_4e-16 * (1e7f64 / std::f64::consts::TAU).floor())).abs() < 1e-12);
        assert!((int_angle(3, 1.0f64) - 3.0).abs() < 1e-15);
        assert!((int_angle(-7, 2.0f64) - (-14.0 + 2.0 * std::f64::consts::TAU)).abs() < 1e-14);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sqrt()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, s) = mean_stderr(&[2.0f32; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 0.0);
    }
}
