//! Generic floating point support.
//!
//! All of the radio, welfare and swarm math is written against [`Scalar`] so
//! the same code runs in `f32` or `f64`. The harness pins `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point types the simulator can run on.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Converts an element count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle in degrees to `(-180, 180]`.
pub fn wrap_degrees<S: Scalar>(angle: S) -> S {
    let full = S::lit(360.0);
    let half = S::lit(180.0);
    let mut a = angle % full;
    if a > half {
        a = a - full;
    } else if a <= -half {
        a = a + full;
    }
    a
}

/// Direction of `to` as seen from `from`, in degrees within `(-180, 180]`.
pub fn bearing_degrees<S: Scalar>(from: [S; 2], to: [S; 2]) -> S {
    let dy = to[1] - from[1];
    let dx = to[0] - from[0];
    wrap_degrees(dy.atan2(dx).to_degrees())
}

pub fn distance<S: Scalar>(a: [S; 2], b: [S; 2]) -> S {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// dBm to watts.
pub fn dbm_to_watts<S: Scalar>(dbm: S) -> S {
    S::lit(10.0).powf((dbm - S::lit(30.0)) / S::lit(10.0))
}

pub fn watts_to_dbm<S: Scalar>(watts: S) -> S {
    S::lit(10.0) * watts.log10() + S::lit(30.0)
}

pub fn linear_to_db<S: Scalar>(ratio: S) -> S {
    S::lit(10.0) * ratio.log10()
}
