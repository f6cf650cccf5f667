//! Böttcher coordinate `φ_a`, Green's function `g_a`, conformal radius
//! `r(a)` and the component parametrization `Φ(a) = -φ_a(1)`.
//!
//! Near the superattracting fixed point the coordinate expands as
//! `φ_a(z) = (a/2) z (1 + z/3 + (5/72 + a/12) z² + O(z³))` and conjugates
//! `f_a` to `z ↦ z²`. Evaluation iterates the orbit into a linearization
//! disk, applies that local series, and pulls potential and argument back by
//! exact powers of two; this sidesteps the `2^n`-th-root branch explosion of
//! the literal infinite product while keeping its factor-by-factor branch
//! contract: every recorded factor uses the principal logarithm, with values
//! on the negative real axis normalized to argument `+π`.
//!
//! Branch continuity along *paths* is the caller's business (the ray tracer
//! maintains it); standalone evaluations are principal-branch by contract.

use std::fmt;

use crate::family::{self, Parameter};
use crate::{lit, Complex, Real};

/// Böttcher evaluation at a point of the basin.
#[derive(Clone, Copy, Debug)]
pub struct BoettcherEval<T: Real> {
    /// `φ_a(z)`, of modulus `< 1` on the basin.
    pub value: Complex<T>,
    /// Iterations taken to reach the linearization disk (plus refinement).
    pub depth: u32,
    /// `log |value|`, the Green potential.
    pub potential: T,
}

/// Errors from potential-theory evaluations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BasinError {
    /// Orbit escaped (`budget_exhausted = false`) or ran out of budget
    /// (`budget_exhausted = true`) before trapping at the origin.
    NotInBasin { budget_exhausted: bool },
    /// A product factor grazed the negative real axis too closely for its
    /// principal branch to be stable; the caller must subdivide its path.
    BranchAmbiguous { step: u32 },
    /// Orbit of the asymptotic value does not converge to the origin (or the
    /// potential consistency proxy fails), so `a` is not accepted as a
    /// main-component parameter.
    NotInComponent,
}

impl fmt::Display for BasinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasinError::NotInBasin { budget_exhausted: true } => {
                write!(f, "orbit budget exhausted before reaching the basin trap")
            }
            BasinError::NotInBasin { budget_exhausted: false } => {
                write!(f, "orbit escapes; point not in the basin of 0")
            }
            BasinError::BranchAmbiguous { step } => {
                write!(f, "branch ambiguous: product factor on the cut at step {step}")
            }
            BasinError::NotInComponent => {
                write!(f, "parameter fails the main-component membership proxy")
            }
        }
    }
}

impl std::error::Error for BasinError {}

/// Accuracy/budget knobs for potential evaluations.
#[derive(Clone, Copy, Debug)]
pub struct PotentialConfig<T: Real> {
    /// Target truncation error of potentials and functional equations.
    pub tol: T,
    /// Orbit iteration budget.
    pub budget: u32,
    /// Modulus beyond which an orbit counts as escaped.
    pub escape_bound: T,
}

impl<T: Real> Default for PotentialConfig<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-8),
            budget: 10_000,
            escape_bound: lit(1e10),
        }
    }
}

impl<T: Real> PotentialConfig<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// Solver-grade accuracy.
    pub fn tight() -> Self {
        Self::with_tol(lit(1e-12))
    }
}

/// Radius of the linearization disk: `min(0.05, 0.1/|a|)`.
///
/// Inside it the local series is accurate and one application of `f_a`
/// contracts the modulus by at least a factor `~0.05`.
pub fn linearization_radius<T: Real>(a: Parameter<T>) -> T {
    let cap = lit::<T>(0.05);
    let scaled = lit::<T>(0.1) / a.modulus();
    cap.min(scaled)
}

/// `φ_a(w)/w = (a/2)(1 + w/3 + (5/72 + a/12) w²)` inside the disk.
fn local_conjugacy_factor<T: Real>(a: Parameter<T>, w: Complex<T>) -> Complex<T> {
    let third = lit::<T>(1.0 / 3.0);
    let c2 = Complex::new(lit::<T>(5.0 / 72.0), T::zero()) + a.value() * lit::<T>(1.0 / 12.0);
    let half_a = a.value() * lit::<T>(0.5);
    half_a * (Complex::new(T::one(), T::zero()) + w * third + c2 * w * w)
}

/// Principal argument with the cut normalized: signed zeros and
/// roundoff-size imaginary parts (below `1e-13 |Re|`) on the negative real
/// axis snap to `+π` deterministically, so real-axis orbits stay stable
/// under machine-noise perturbations.
fn arg_principal<T: Real>(c: Complex<T>) -> T {
    if c.re < T::zero() && c.im.abs() <= c.re.abs() * lit::<T>(1e-13) {
        return T::PI();
    }
    let im = if c.im.is_zero() { T::zero() } else { c.im };
    im.atan2(c.re)
}

fn ln_principal<T: Real>(c: Complex<T>) -> Complex<T> {
    Complex::new(c.norm().ln(), arg_principal(c))
}

/// A factor close enough to the negative real axis that its side is
/// suspect, yet above the deterministic snap band: the principal branch
/// would encode a coin flip, so the evaluation refuses instead.
fn grazes_cut<T: Real>(c: Complex<T>) -> bool {
    let m = c.im.abs();
    c.re < T::zero()
        && m > c.re.abs() * lit::<T>(1e-13)
        && m < c.re.abs() * lit::<T>(1e-11)
}

/// Outcome of driving an orbit into the linearization disk.
struct DiskDescent<T: Real> {
    /// Final iterate, deep inside the disk.
    w: Complex<T>,
    /// Number of iterations taken.
    depth: u32,
}

/// Iterate until the scaled truncation error `2^{-n} |w|` drops below
/// `tol/10` (and `|w|` is inside the linearization disk), calling `factor`
/// with each product factor `f(w)/w²`.
fn descend<T: Real>(
    a: Parameter<T>,
    z: Complex<T>,
    cfg: &PotentialConfig<T>,
    mut factor: impl FnMut(u32, Complex<T>, Complex<T>) -> Result<(), BasinError>,
) -> Result<DiskDescent<T>, BasinError> {
    let eps = linearization_radius(a);
    let floor = T::min_positive_value().sqrt();
    let goal = cfg.tol * lit::<T>(0.1);
    let esc2 = cfg.escape_bound * cfg.escape_bound;
    let mut w = z;
    let mut n = 0u32;
    let mut scale = T::one(); // 2^{-n}, exact
    let half = lit::<T>(0.5);
    loop {
        let m = w.norm();
        if m.is_zero() {
            // exact preimage of the fixed point: potential -infinity
            return Ok(DiskDescent { w, depth: n });
        }
        if m < eps && (scale * m <= goal || m < floor) {
            return Ok(DiskDescent { w, depth: n });
        }
        if n >= cfg.budget {
            return Err(BasinError::NotInBasin {
                budget_exhausted: true,
            });
        }
        let w1 = family::eval(a, w);
        if w1.norm_sqr() > esc2 {
            return Err(BasinError::NotInBasin {
                budget_exhausted: false,
            });
        }
        n += 1;
        scale = scale * half;
        factor(n, w, w1)?;
        w = w1;
    }
}

/// Green's function of the basin of `0`, extended along the orbit by
/// `g(f_a(z)) = 2 g(z)`.
///
/// Returns `-∞` for the fixed point itself (and exact preimages of it),
/// `NotInBasin` when the orbit escapes or exhausts its budget. Strictly
/// negative on the basin.
pub fn green<T: Real>(
    a: Parameter<T>,
    z: Complex<T>,
    cfg: &PotentialConfig<T>,
) -> Result<T, BasinError> {
    let d = descend(a, z, cfg, |_, _, _| Ok(()))?;
    if d.w.norm().is_zero() {
        return Ok(T::neg_infinity());
    }
    let scale = lit::<T>(2.0).powi(-(d.depth as i32));
    let local = local_conjugacy_factor(a, d.w);
    Ok(scale * (d.w.norm().ln() + local.norm().ln()))
}

/// Accumulated principal logarithm of `φ_a(z)` plus the depth used.
///
/// `log φ = Log z + Σ_k 2^{-k} Log(f^k/f^{k-1}²) + 2^{-n} Log(φ_loc(w_n)/w_n)`;
/// the real part is the Green potential and the imaginary part carries the
/// external angle (times `2π`).
pub fn log_boettcher<T: Real>(
    a: Parameter<T>,
    z: Complex<T>,
    cfg: &PotentialConfig<T>,
) -> Result<(Complex<T>, u32), BasinError> {
    if z.norm().is_zero() {
        // φ(0) = 0; no finite logarithm
        return Ok((Complex::new(T::neg_infinity(), T::zero()), 0));
    }
    let mut acc = ln_principal(z);
    let mut scale = T::one();
    let half = lit::<T>(0.5);
    let d = descend(a, z, cfg, |step, w, w1| {
        let r = w1 / (w * w);
        if grazes_cut(r) {
            return Err(BasinError::BranchAmbiguous { step });
        }
        scale = scale * half;
        acc = acc + ln_principal(r) * scale;
        Ok(())
    })?;
    if d.w.norm().is_zero() {
        return Ok((Complex::new(T::neg_infinity(), T::zero()), d.depth));
    }
    let tail = local_conjugacy_factor(a, d.w);
    if grazes_cut(tail) {
        return Err(BasinError::BranchAmbiguous { step: d.depth });
    }
    acc = acc + ln_principal(tail) * scale;
    Ok((acc, d.depth))
}

/// Böttcher coordinate at a basin point.
///
/// Satisfies `|φ(f_a(z)) - φ(z)²| < tol` wherever both sides evaluate, and
/// `φ(z) = (a/2) z + O(z²)` near the origin.
pub fn boettcher<T: Real>(
    a: Parameter<T>,
    z: Complex<T>,
    cfg: &PotentialConfig<T>,
) -> Result<BoettcherEval<T>, BasinError> {
    let (logphi, depth) = log_boettcher(a, z, cfg)?;
    if logphi.re == T::neg_infinity() {
        return Ok(BoettcherEval {
            value: Complex::new(T::zero(), T::zero()),
            depth,
            potential: T::neg_infinity(),
        });
    }
    Ok(BoettcherEval {
        value: logphi.exp(),
        depth,
        potential: logphi.re,
    })
}

/// External angle `arg φ_a(z) / 2π ∈ [0, 1)`, branch fixed by the factor
/// accumulation along the orbit.
///
/// Satisfies `angle(f_a(z)) = 2 angle(z) (mod 1)` to tolerance.
pub fn external_angle<T: Real>(
    a: Parameter<T>,
    z: Complex<T>,
    cfg: &PotentialConfig<T>,
) -> Result<T, BasinError> {
    let (logphi, _) = log_boettcher(a, z, cfg)?;
    let tau = T::PI() + T::PI();
    let t = logphi.im / tau;
    Ok(t - t.floor())
}

/// Conformal radius `r(a) = e^{g_a(1)} = |φ_a(1)| ∈ (0, 1)` of the maximal
/// Böttcher domain, for main-component parameters.
pub fn conformal_radius<T: Real>(
    a: Parameter<T>,
    cfg: &PotentialConfig<T>,
) -> Result<T, BasinError> {
    let one = Complex::new(T::one(), T::zero());
    match green(a, one, cfg) {
        Ok(g) => Ok(g.exp()),
        Err(BasinError::NotInBasin { .. }) => Err(BasinError::NotInComponent),
        Err(e) => Err(e),
    }
}

/// Component parametrization `Φ(a) = -φ_a(1) ∈ 𝔻`, with `Φ(a) ≈ -a/√2`
/// near the origin.
pub fn big_phi<T: Real>(
    a: Parameter<T>,
    cfg: &PotentialConfig<T>,
) -> Result<Complex<T>, BasinError> {
    let one = Complex::new(T::one(), T::zero());
    match boettcher(a, one, cfg) {
        Ok(eval) => Ok(-eval.value),
        Err(BasinError::NotInBasin { .. }) => Err(BasinError::NotInComponent),
        Err(e) => Err(e),
    }
}

/// Operational membership proxy for the main component: the orbit of the
/// asymptotic value converges to `0` and the potentials satisfy
/// `g_a(a) = 2 g_a(1)`.
///
/// The true membership condition is topological (the basin must be totally
/// invariant) and is not finitely checkable; this proxy is what the rest of
/// the crate uses and is documented as such.
pub fn is_in_main_component<T: Real>(a: Parameter<T>, cfg: &PotentialConfig<T>) -> bool {
    let one = Complex::new(T::one(), T::zero());
    let (ga, g1) = match (green(a, a.value(), cfg), green(a, one, cfg)) {
        (Ok(ga), Ok(g1)) => (ga, g1),
        _ => return false,
    };
    if !ga.is_finite() || !g1.is_finite() {
        return false;
    }
    let slack = lit::<T>(1e-6) * (T::one() + ga.abs());
    (ga - g1 - g1).abs() <= slack
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Cplx;
    use approx::assert_relative_eq;

    fn p(re: f64, im: f64) -> Parameter<f64> {
        Parameter::new(Cplx::new(re, im)).unwrap()
    }

    fn cfg() -> PotentialConfig<f64> {
        PotentialConfig::tight()
    }

    #[test]
    fn green_sentinel_at_origin() {
        let a = p(0.4, 0.6);
        assert_eq!(green(a, Cplx::new(0.0, 0.0), &cfg()), Ok(f64::NEG_INFINITY));
    }

    #[test]
    fn green_negative_inside_basin() {
        let a = p(0.4, 0.6);
        let g = green(a, Cplx::new(0.3, -0.2), &cfg()).unwrap();
        assert!(g < 0.0, "g = {g}");
    }

    #[test]
    fn green_rejects_escaping_points() {
        let a = p(1.0, 0.0);
        match green(a, Cplx::new(60.0, 0.0), &cfg()) {
            Err(BasinError::NotInBasin {
                budget_exhausted: false,
            }) => {}
            other => panic!("expected escape, got {other:?}"),
        }
    }

    #[test]
    fn potential_halves_from_one_to_a() {
        // g_a(a) = 2 g_a(1) since f_a(1) = a exactly
        let a = p(0.4, 0.6);
        let g1 = green(a, Cplx::new(1.0, 0.0), &cfg()).unwrap();
        let ga = green(a, a.value(), &cfg()).unwrap();
        assert_relative_eq!(ga, 2.0 * g1, max_relative = 1e-12);
    }

    #[test]
    fn functional_equations_on_a_sample() {
        let a = p(0.4, 0.6);
        let c = cfg();
        let z = Cplx::new(0.8, 0.5);
        let g = green(a, z, &c).unwrap();
        let gf = green(a, family::eval(a, z), &c).unwrap();
        assert!((gf - 2.0 * g).abs() < 1e-12, "green doubling residual");

        let phi = boettcher(a, z, &c).unwrap().value;
        let phif = boettcher(a, family::eval(a, z), &c).unwrap().value;
        assert!((phif - phi * phi).norm() < 1e-12, "Böttcher functional equation");
    }

    #[test]
    fn derivative_at_origin_is_half_a() {
        let a = p(0.3, 0.4);
        let c = cfg();
        let h = 1e-5;
        let fp = boettcher(a, Cplx::new(h, 0.0), &c).unwrap().value;
        let fm = boettcher(a, Cplx::new(-h, 0.0), &c).unwrap().value;
        let deriv = (fp - fm) / (2.0 * h);
        let target = a.value() / 2.0;
        assert!((deriv - target).norm() / target.norm() < 1e-6);
    }

    #[test]
    fn positive_real_data_gives_positive_phi() {
        let a = p(0.9, 0.0);
        let c = cfg();
        let phi = boettcher(a, Cplx::new(0.02, 0.0), &c).unwrap().value;
        assert!(phi.im.abs() < 1e-15 && phi.re > 0.0);
        let ang = external_angle(a, Cplx::new(0.02, 0.0), &c).unwrap();
        assert!(ang < 1e-12 || ang > 1.0 - 1e-12);
    }

    #[test]
    fn negative_real_parameter_is_stable() {
        // factors sit exactly on the cut; arg normalization keeps the
        // evaluation deterministic and the angle identity intact
        let a = p(-3.0, 0.0);
        let c = cfg();
        let z = Cplx::new(-0.04, 0.0);
        let e = boettcher(a, z, &c).unwrap();
        assert!(e.potential.is_finite());
        let ang = external_angle(a, z, &c).unwrap();
        assert!(ang < 1e-12 || ang > 1.0 - 1e-12, "angle {ang}");
    }

    #[test]
    fn angle_doubling_identity() {
        let a = p(0.4, 0.6);
        let c = cfg();
        for &(re, im) in &[(0.8, 0.5), (-1.2, 0.4), (0.1, -0.9)] {
            let z = Cplx::new(re, im);
            let t = external_angle(a, z, &c).unwrap();
            let t2 = external_angle(a, family::eval(a, z), &c).unwrap();
            let d = crate::angles::circle_distance(2.0 * t, t2);
            assert!(d < 1e-10, "doubling identity off by {d}");
        }
    }

    #[test]
    fn conformal_radius_and_big_phi_agree() {
        let a = p(0.4, 0.6);
        let c = cfg();
        let r = conformal_radius(a, &c).unwrap();
        let phi = big_phi(a, &c).unwrap();
        assert!(r > 0.0 && r < 1.0);
        assert!(phi.norm() < 1.0);
        assert_relative_eq!(r, phi.norm(), max_relative = 1e-12);
    }

    #[test]
    fn membership_proxy() {
        let c = PotentialConfig::default();
        assert!(is_in_main_component(p(0.4, 0.6), &c));
        assert!(is_in_main_component(p(0.05, 0.0), &c));
        // far outside the bounded component the asymptotic value escapes
        assert!(!is_in_main_component(p(20.0, 0.0), &c));
    }

    #[test]
    fn potential_consistent_between_paths() {
        let a = p(0.4, 0.6);
        let c = cfg();
        let z = Cplx::new(0.6, -0.4);
        let g = green(a, z, &c).unwrap();
        let b = boettcher(a, z, &c).unwrap();
        assert_relative_eq!(g, b.potential, max_relative = 1e-12, epsilon = 1e-13);
        assert_relative_eq!(b.potential, b.value.norm().ln(), max_relative = 1e-12);
    }
}
