use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar the numeric core is generic over.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant, panicking only for non-representable values.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable")
    }

    /// Converts a count.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable")
    }

    /// Lossy widening used for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance floor: `nominal` for `f64`, raised to a few ulps for
    /// narrower types where `nominal` is below machine precision.
    fn tol(nominal: f64) -> Self {
        let floor = Self::epsilon() * Self::c(16.0);
        Self::c(nominal).max(floor)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
