//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the solvers are written against.
///
/// The associated tolerances scale with the precision of the type: `f64`
/// carries the tolerances the crate's certificates are stated in, `f32` is
/// usable for quick experiments with correspondingly looser checks.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Total-mass tolerance accepted (and renormalized) at construction.
    const MASS_TOL: f64;
    /// Magnitude below which a flow, kernel entry or tableau entry is zero.
    const ZERO_TOL: f64;
    /// Smallest admissible pivot magnitude in the dense simplex.
    const PIVOT_TOL: f64;
    /// Slack accepted on reduced costs and duality gaps.
    const OPT_TOL: f64;

    /// Converts an `f64` literal. Panics only for values outside the range of `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range for scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Bit pattern used for exact duplicate detection; `-0.0` and `0.0` share a key.
    #[inline]
    fn canonical_key(self) -> u64 {
        let v = self.as_f64();
        if v == 0.0 {
            0
        } else {
            v.to_bits()
        }
    }
}

impl Scalar for f64 {
    const MASS_TOL: f64 = 1e-12;
    const ZERO_TOL: f64 = 1e-14;
    const PIVOT_TOL: f64 = 1e-11;
    const OPT_TOL: f64 = 1e-10;
}

impl Scalar for f32 {
    const MASS_TOL: f64 = 1e-5;
    const ZERO_TOL: f64 = 1e-6;
    const PIVOT_TOL: f64 = 1e-5;
    const OPT_TOL: f64 = 1e-4;
}

/// Sum with Neumaier compensation.
pub fn compensated_sum<T: Scalar, I: IntoIterator<Item = T>>(items: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in items {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running Neumaier sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Accumulator<T> {
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}
