use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type for all numeric computation in this crate.
///
/// Implemented for `f32` and `f64`; `f64` is the default everywhere and the
/// one the CLI uses. The per-type tolerances reflect how much headroom the
/// iterated polytope operations need in each precision.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Feasibility tolerance: a constraint `a·x <= b` counts as satisfied
    /// when `a·x <= b + feas_tol()`.
    fn feas_tol() -> Self;

    /// Magnitudes below this are treated as zero when selecting pivots.
    fn pivot_tol() -> Self;

    /// Two vertex candidates closer than this (in max norm) are merged.
    fn vertex_merge_tol() -> Self;
}

impl Scalar for f64 {
    fn feas_tol() -> Self {
        1e-7
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn vertex_merge_tol() -> Self {
        1e-8
    }
}

impl Scalar for f32 {
    fn feas_tol() -> Self {
        1e-4
    }
    fn pivot_tol() -> Self {
        1e-6
    }
    fn vertex_merge_tol() -> Self {
        1e-4
    }
}

/// Convert an `f64` literal into the scalar type.
pub fn scalar<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable in the scalar type")
}
