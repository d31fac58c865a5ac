//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the learners and metrics are generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute/relative slack under which two criterion values count as tied.
    fn tie_tolerance() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `true` when `candidate` beats `incumbent` by more than the tie tolerance.
pub(crate) fn improves<T: Scalar>(candidate: T, incumbent: T) -> bool {
    let scale = T::one().max(candidate.abs()).max(incumbent.abs());
    candidate - incumbent > T::tie_tolerance() * scale
}

/// Strictly positive beyond rounding noise.
pub(crate) fn is_positive<T: Scalar>(gain: T) -> bool {
    improves(gain, T::zero())
}

/// Split threshold between two consecutive distinct sorted values.
///
/// `(lo + hi) / 2`, falling back to `hi` when the two are adjacent floats and
/// the midpoint rounds onto `lo`.
pub(crate) fn midpoint<T: Scalar>(lo: T, hi: T) -> T {
    let mid = (lo + hi) / T::lit(2.0);
    if mid <= lo {
        hi
    } else {
        mid
    }
}
