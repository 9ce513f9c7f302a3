//! The scalar abstraction: plain floats and jets share one interface.

use std::cell::Cell;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

thread_local! {
    /// Name of the first non-smooth primitive hit since the last clear.
    /// Checked at evaluation boundaries; NaN propagation does the rest.
    static POISON: Cell<Option<&'static str>> = const { Cell::new(None) };
}

pub(crate) fn set_poison(what: &'static str) {
    POISON.with(|p| {
        if p.get().is_none() {
            p.set(Some(what));
        }
    });
}

pub(crate) fn clear_poison() {
    POISON.with(|p| p.set(None));
}

pub(crate) fn take_poison() -> Option<&'static str> {
    POISON.with(|p| p.replace(None))
}

/// Arithmetic required by every field evaluator in this crate.
///
/// Implemented by `f64`, `f32` and [`Jet<S>`](super::Jet). Because jets again
/// satisfy the bound, evaluators can be fed jets of jets, which is how higher
/// and mixed derivatives of derived quantities are obtained.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Embeds a constant.
    fn from_f64(c: f64) -> Self;

    /// Value part with every derivative level stripped off.
    fn re(&self) -> f64;

    /// Square root. Poisons the evaluation when the value part is negative.
    fn sqrt(&self) -> Self;

    /// Natural exponential.
    fn exp(&self) -> Self;

    /// Multiplication by a plain constant.
    fn scale(&self, c: f64) -> Self;

    /// Reciprocal. Poisons the evaluation when the value part is zero.
    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }

    /// Product through references; lets jet impls skip operand clones.
    fn mul_ref(&self, rhs: &Self) -> Self {
        self.clone() * rhs.clone()
    }

    /// Integer power by square-and-multiply.
    fn powi(&self, k: i32) -> Self {
        if k < 0 {
            return self.powi(-k).recip();
        }
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

macro_rules! impl_scalar_for_float {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_f64(c: f64) -> Self {
                c as $t
            }

            fn re(&self) -> f64 {
                *self as f64
            }

            fn sqrt(&self) -> Self {
                if *self < 0.0 {
                    set_poison("square root of a negative operand");
                }
                <$t>::sqrt(*self)
            }

            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }

            fn scale(&self, c: f64) -> Self {
                *self * c as $t
            }

            fn recip(&self) -> Self {
                if *self == 0.0 {
                    set_poison("reciprocal of zero");
                }
                1.0 as $t / *self
            }

            fn powi(&self, k: i32) -> Self {
                <$t>::powi(*self, k)
            }
        }
    };
}

impl_scalar_for_float!(f64);
impl_scalar_for_float!(f32);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_poison_on_negative_sqrt() {
        clear_poison();
        let v = Scalar::sqrt(&-1.0f64);
        assert!(v.is_nan());
        assert_eq!(take_poison(), Some("square root of a negative operand"));
        assert_eq!(take_poison(), None);
    }

    #[test]
    fn powi_matches_std() {
        let x: f64 = 1.7;
        for k in -4..=4 {
            let via_trait = Scalar::powi(&x, k);
            assert!((via_trait - x.powi(k)).abs() < 1e-12 * x.powi(k).abs());
        }
    }

    #[test]
    fn f32_round_trip() {
        let x = <f32 as Scalar>::from_f64(0.5);
        assert_eq!(x.re(), 0.5);
        assert_eq!(Scalar::sqrt(&x), 0.5f32.sqrt());
    }
}
