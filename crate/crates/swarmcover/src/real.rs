//! Scalar abstraction for the core math.
//!
//! Everything numeric in this crate is generic over [`Real`], which is any
//! floating-point type nalgebra can treat as a real field (`f32` or `f64`).
//! Concrete `f64` aliases for the main types live at the crate root.

/// Floating-point scalar usable by every module of this crate.
pub trait Real:
    Copy + nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// True when `x` is neither NaN nor infinite.
#[inline]
pub fn is_finite<T: Real>(x: T) -> bool {
    x == x && x.abs() < real::<T>(f64::INFINITY)
}
