//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for literal constants.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `(-1)^n` as a scalar.
#[inline]
pub fn parity_sign<T: Scalar>(n: usize) -> T {
    if n.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

/// Binomial coefficient as a scalar. Exact for the small arguments used here.
pub fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    T::from_u128(acc).expect("binomial representable")
}

/// Exact rational cosine `cos(2*pi*alpha/p)` for the planar counts 3, 4 and 6.
///
/// Stored as `num / den` so that reflection identities are checked without
/// trigonometric round-off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalCosine {
    pub num: i32,
    pub den: i32,
}

impl RationalCosine {
    pub fn of_turn(alpha: usize, p: usize) -> Option<Self> {
        let a = alpha % p;
        // cos(2*pi*a/p) in units of 1/2
        let halves = match (p, a) {
            (_, 0) => 2,
            (3, _) => -1,
            (4, 1) | (4, 3) => 0,
            (4, 2) => -2,
            (6, 1) | (6, 5) => 1,
            (6, 2) | (6, 4) => -1,
            (6, 3) => -2,
            (2, 1) => -2,
            _ => return None,
        };
        Some(RationalCosine { num: halves, den: 2 })
    }

    pub fn value<T: Scalar>(self) -> T {
        T::lit(self.num as f64) / T::lit(self.den as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial::<f64>(5, 2), 10.0);
        assert_eq!(binomial::<f64>(4, 0), 1.0);
        assert_eq!(binomial::<f64>(3, 4), 0.0);
        assert_eq!(binomial::<f64>(30, 15), 155117520.0);
    }

    #[test]
    fn rational_cosines_match_trig() {
        for p in [3usize, 4, 6] {
            for a in 0..p {
                let c = RationalCosine::of_turn(a, p).unwrap().value::<f64>();
                let t = (2.0 * std::f64::consts::PI * a as f64 / p as f64).cos();
                assert!((c - t).abs() < 1e-15, "p={p} a={a}");
            }
        }
        assert!(RationalCosine::of_turn(1, 5).is_none());
    }
}
