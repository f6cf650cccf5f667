//! Numerical toolkit for the one-parameter entire family
//! `f_a(z) = a (e^z (z - 1) + 1)`, `a ∈ ℂ*`.
//!
//! The critical point of every member sits at the origin and is fixed, so `0`
//! is superattracting; the free singular value is the asymptotic value `a`,
//! whose unique finite preimage is `z = 1`. This crate provides the
//! computational machinery around that structure:
//!
//! * [`angles`] — exact rational angles under the doubling map;
//! * [`family`] — evaluation, derivatives, orbits, the normal form and the
//!   polynomial analog;
//! * [`boettcher`] — Böttcher coordinate, Green's function, conformal radius
//!   and the component parametrization `Φ(a) = -φ_a(1)`;
//! * [`rays`] — internal dynamic/parameter ray tracing by Newton continuation
//!   and landing extrapolation;
//! * [`landing`] — landing-point solvers for the parabolic, repelling-cycle
//!   and Misiurewicz cases;
//! * [`planes`] — deterministic escape/attraction renderers for both planes;
//! * [`convlab`] — spherical/Hausdorff metrics on pixel sets, Carathéodory
//!   convergence probes and half-plane hyperbolic estimates.
//!
//! All floating numerics are generic over the scalar through [`Real`]; the
//! crate root exports concrete aliases: [`Cplx`] for double precision and
//! [`Extended`] for double-double solver runs.

pub mod angles;
pub mod boettcher;
pub mod convlab;
pub mod family;
pub mod landing;
pub mod planes;
pub mod rays;

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Scalar abstraction for all plane, ray and solver numerics.
///
/// Implemented by `f32`, `f64` and [`Extended`] through the blanket impl.
pub trait Real:
    Float + FloatConst + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
}

/// Complex number over any [`Real`] scalar.
pub type Complex<T> = num_complex::Complex<T>;

/// Double-precision complex number, the default working type.
pub type Cplx = Complex<f64>;

/// Double-double scalar (~31 significant digits) for extended-precision runs.
pub type Extended = twofloat::TwoFloat;

/// Complex number over the extended scalar.
pub type CplxExt = Complex<Extended>;

/// Lift an `f64` literal into any [`Real`] scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must be representable in the scalar type")
}

/// Lift an `f64` pair into a complex number over any [`Real`] scalar.
#[inline]
pub fn clit<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(lit(re), lit(im))
}

/// Round-trip a scalar to `f64` for reporting and serialization.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
