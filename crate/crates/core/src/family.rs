//! The family `f_a(z) = a (e^z (z - 1) + 1)` and its basic calculus.
//!
//! `f_a` fixes the simple critical point `0` (so `0` is superattracting with
//! local degree 2) and sends the finite preimage `z = 1` of the asymptotic
//! value exactly to `a`. Both anchors hold bit-exactly in the evaluation.
//!
//! Overflow contract: once `e^z` (or a later product) would leave the
//! representable range, evaluation returns a saturated escape sentinel of
//! huge but finite modulus instead of a silent NaN; orbit classification
//! treats the sentinel as escape.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::{lit, Complex, Real};

/// Nonzero family parameter `a`.
#[derive(Clone, Copy, PartialEq)]
pub struct Parameter<T: Real>(Complex<T>);

/// Errors from parameter construction and the normal form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyError {
    ZeroParameter,
    /// Normal form requires a nonzero preimage location `u`.
    ZeroPreimage,
    /// Normal form requires a nonzero asymptotic value `v`.
    ZeroAsymptoticValue,
    ParseComplex(String),
}

impl fmt::Display for FamilyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyError::ZeroParameter => write!(f, "family parameter must be nonzero"),
            FamilyError::ZeroPreimage => write!(f, "asymptotic-value preimage must be nonzero"),
            FamilyError::ZeroAsymptoticValue => write!(f, "asymptotic value must be nonzero"),
            FamilyError::ParseComplex(s) => write!(f, "cannot parse complex number: {s}"),
        }
    }
}

impl std::error::Error for FamilyError {}

impl<T: Real> Parameter<T> {
    pub fn new(a: Complex<T>) -> Result<Self, FamilyError> {
        if a.re.is_zero() && a.im.is_zero() {
            Err(FamilyError::ZeroParameter)
        } else {
            Ok(Self(a))
        }
    }

    pub fn value(self) -> Complex<T> {
        self.0
    }

    pub fn modulus(self) -> T {
        self.0.norm()
    }
}

impl<T: Real> fmt::Debug for Parameter<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a = {} + {}i", self.0.re, self.0.im)
    }
}

impl<T: Real> FromStr for Parameter<T> {
    type Err = FamilyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parameter::new(parse_complex(s)?)
    }
}

/// Parse `re`, `re+imi`, `re-imi`, `imi`, `i`, `-i` into a complex number.
pub fn parse_complex<T: Real>(s: &str) -> Result<Complex<T>, FamilyError> {
    let raw = s.trim();
    let err = || FamilyError::ParseComplex(raw.to_string());
    if raw.is_empty() {
        return Err(err());
    }
    let parse_re = |t: &str| t.parse::<f64>().map(|x| lit::<T>(x));
    if let Some(im_part) = raw.strip_suffix(['i', 'I']) {
        // split at the last +/- that is not a leading sign or exponent sign
        let bytes = im_part.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            let c = bytes[k] as char;
            if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                split = Some(k);
                break;
            }
        }
        match split {
            Some(k) => {
                let re = parse_re(&im_part[..k]).map_err(|_| err())?;
                let im_str = &im_part[k..];
                let im = match im_str {
                    "+" => lit(1.0),
                    "-" => lit(-1.0),
                    _ => parse_re(im_str).map_err(|_| err())?,
                };
                Ok(Complex::new(re, im))
            }
            None => {
                let im = match im_part {
                    "" => lit(1.0),
                    "-" => lit(-1.0),
                    "+" => lit(1.0),
                    _ => parse_re(im_part).map_err(|_| err())?,
                };
                Ok(Complex::new(T::zero(), im))
            }
        }
    } else {
        Ok(Complex::new(parse_re(raw).map_err(|_| err())?, T::zero()))
    }
}

/// Modulus of the saturated escape sentinel.
pub fn escape_sentinel_modulus<T: Real>() -> T {
    T::max_value().sqrt()
}

/// Saturated stand-in for an overflowed evaluation: finite, huge modulus.
fn escape_sentinel<T: Real>() -> Complex<T> {
    Complex::new(escape_sentinel_modulus::<T>(), T::zero())
}

/// `e^z (z - 1) + 1 = Σ_{k≥2} (k-1)/k! z^k`, evaluated cancellation-free.
///
/// The direct form loses `~2ε/|z|²` relative accuracy near the origin (at
/// `|z| = 10⁻⁴` every digit is gone), so below `|z| = 0.05` the series is
/// summed instead; eleven terms leave a relative tail under `10⁻²²` there.
pub fn entire_part<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = lit::<T>(0.5);
    if z.norm_sqr() < lit::<T>(0.05 * 0.05) {
        // term_k = (k-1)/k! z^k, term ratio k/((k+1)(k-1)) z
        let mut term = z * z * half;
        let mut sum = term;
        for k in 2..=12u32 {
            let kf = lit::<T>(k as f64);
            let ratio = kf / ((kf + T::one()) * (kf - T::one()));
            term = term * z * ratio;
            sum = sum + term;
        }
        sum
    } else {
        z.exp() * (z - T::one()) + T::one()
    }
}

/// Evaluate `f_a(z)`; `f_a(0) = 0` and `f_a(1) = a` hold exactly.
pub fn eval<T: Real>(a: Parameter<T>, z: Complex<T>) -> Complex<T> {
    // e^z overflows close to ln(MAX); saturate early so the trailing
    // products stay finite
    let max_re = T::max_value().ln() * lit::<T>(0.25);
    if z.re > max_re || !z.re.is_finite() || !z.im.is_finite() {
        return escape_sentinel();
    }
    let w = a.value() * entire_part(z);
    if w.re.is_finite() && w.im.is_finite() {
        w
    } else {
        escape_sentinel()
    }
}

/// `∂f_a/∂z = a z e^z`; vanishes only at the critical point `0`.
pub fn deriv_z<T: Real>(a: Parameter<T>, z: Complex<T>) -> Complex<T> {
    let max_re = T::max_value().ln() * lit::<T>(0.25);
    if z.re > max_re || !z.re.is_finite() || !z.im.is_finite() {
        return escape_sentinel();
    }
    let w = a.value() * z * z.exp();
    if w.re.is_finite() && w.im.is_finite() {
        w
    } else {
        escape_sentinel()
    }
}

/// `∂f_a/∂a = e^z (z - 1) + 1 = f_a(z)/a`.
pub fn deriv_a<T: Real>(_a: Parameter<T>, z: Complex<T>) -> Complex<T> {
    let max_re = T::max_value().ln() * lit::<T>(0.25);
    if z.re > max_re || !z.re.is_finite() || !z.im.is_finite() {
        return escape_sentinel();
    }
    let w = entire_part(z);
    if w.re.is_finite() && w.im.is_finite() {
        w
    } else {
        escape_sentinel()
    }
}

/// `∂²f_a/∂z² = a e^z (1 + z)`.
pub fn deriv_zz<T: Real>(a: Parameter<T>, z: Complex<T>) -> Complex<T> {
    let max_re = T::max_value().ln() * lit::<T>(0.25);
    if z.re > max_re || !z.re.is_finite() || !z.im.is_finite() {
        return escape_sentinel();
    }
    let w = a.value() * z.exp() * (z + T::one());
    if w.re.is_finite() && w.im.is_finite() {
        w
    } else {
        escape_sentinel()
    }
}

/// `∂²f_a/∂z∂a = z e^z`.
pub fn deriv_za<T: Real>(_a: Parameter<T>, z: Complex<T>) -> Complex<T> {
    let max_re = T::max_value().ln() * lit::<T>(0.25);
    if z.re > max_re || !z.re.is_finite() || !z.im.is_finite() {
        return escape_sentinel();
    }
    let w = z * z.exp();
    if w.re.is_finite() && w.im.is_finite() {
        w
    } else {
        escape_sentinel()
    }
}

/// Taylor coefficient of `z^k` in `f_a`: `0` for `k ∈ {0, 1}`, `a (k-1)/k!`
/// for `k ≥ 2`.
pub fn taylor_coeff<T: Real>(a: Parameter<T>, k: u32) -> Complex<T> {
    if k < 2 {
        return Complex::new(T::zero(), T::zero());
    }
    // (k-1)/k! by running division; underflows to 0 for huge k, as the
    // true coefficient does
    let mut inv_fact = T::one();
    for i in 1..=k {
        inv_fact = inv_fact / lit::<T>(i as f64);
    }
    a.value() * (inv_fact * lit::<T>((k - 1) as f64))
}

/// Orbit classification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// First iterate index that entered the trap disk around `0`.
    ConvergesToZero(u32),
    /// First iterate index beyond the escape bound (or saturated overflow).
    Escaping(u32),
    Unresolved,
}

/// Recorded orbit with verdict; `samples[k+1] = f_a(samples[k])`.
#[derive(Clone, Debug)]
pub struct OrbitRecord<T: Real> {
    pub samples: Vec<Complex<T>>,
    pub verdict: Verdict,
    pub final_point: Complex<T>,
}

/// Shared iteration core: runs the orbit, feeding every sample (including
/// `z0`) to `sink`, and classifies against `trap_radius`/`escape_bound`.
pub(crate) fn run_orbit<T: Real>(
    a: Parameter<T>,
    z0: Complex<T>,
    budget: u32,
    trap_radius: T,
    escape_bound: T,
    mut sink: impl FnMut(Complex<T>),
) -> (Verdict, Complex<T>) {
    let trap2 = trap_radius * trap_radius;
    let esc2 = escape_bound * escape_bound;
    let mut z = z0;
    sink(z);
    for k in 0..=budget {
        let m2 = z.norm_sqr();
        if m2 < trap2 {
            return (Verdict::ConvergesToZero(k), z);
        }
        if m2 > esc2 {
            return (Verdict::Escaping(k), z);
        }
        if k == budget {
            break;
        }
        z = eval(a, z);
        sink(z);
    }
    (Verdict::Unresolved, z)
}

/// Iterate `z0` until it traps at `0`, escapes, or exhausts the budget,
/// recording every sample.
///
/// Preconditions: `trap_radius < 1 < escape_bound`.
pub fn orbit<T: Real>(
    a: Parameter<T>,
    z0: Complex<T>,
    budget: u32,
    trap_radius: T,
    escape_bound: T,
) -> OrbitRecord<T> {
    debug_assert!(trap_radius < T::one() && escape_bound > T::one());
    let mut samples = Vec::new();
    let (verdict, final_point) = run_orbit(a, z0, budget, trap_radius, escape_bound, |z| {
        samples.push(z)
    });
    // drop samples past the decisive iterate so samples.last() == final_point
    if let Verdict::ConvergesToZero(k) | Verdict::Escaping(k) = verdict {
        samples.truncate(k as usize + 1);
    }
    OrbitRecord {
        samples,
        verdict,
        final_point,
    }
}

/// Allocation-free orbit classification (same semantics as [`orbit`]).
pub fn classify_orbit<T: Real>(
    a: Parameter<T>,
    z0: Complex<T>,
    budget: u32,
    trap_radius: T,
    escape_bound: T,
) -> (Verdict, Complex<T>) {
    run_orbit(a, z0, budget, trap_radius, escape_bound, |_| {})
}

/// Normal-form constructor: for a representative map with finite
/// asymptotic-value preimage at `u` and asymptotic value `v`, the affine
/// change `h(z) = z/u` conjugates it to the family member with `a = v/u`.
pub fn normal_form<T: Real>(u: Complex<T>, v: Complex<T>) -> Result<Parameter<T>, FamilyError> {
    if u.re.is_zero() && u.im.is_zero() {
        return Err(FamilyError::ZeroPreimage);
    }
    if v.re.is_zero() && v.im.is_zero() {
        return Err(FamilyError::ZeroAsymptoticValue);
    }
    Parameter::new(v / u)
}

/// The representative map `g(z) = v ((z/u - 1) e^{z/u} + 1)` realized by the
/// normal form; exposed so conjugacy can be checked by sampling.
pub fn normal_form_representative<T: Real>(
    u: Complex<T>,
    v: Complex<T>,
    z: Complex<T>,
) -> Complex<T> {
    let w = z / u;
    v * entire_part(w)
}

/// Polynomial analog `f_{a,n}(z) = a ((1 + z/n)^n (z - 1) + 1)`, `n ≥ 2`.
///
/// Shares the anchors `f_{a,n}(0) = 0`, `f_{a,n}(1) = a` and converges to
/// `f_a` uniformly on compact sets as `n → ∞`.
pub fn eval_poly_analog<T: Real>(a: Parameter<T>, n: u32, z: Complex<T>) -> Complex<T> {
    assert!(n >= 2, "polynomial analog needs n >= 2");
    let base = Complex::new(T::one(), T::zero()) + z / lit::<T>(n as f64);
    a.value() * (base.powu(n) * (z - T::one()) + T::one())
}
