//! Internal dynamic and parameter rays traced by Newton continuation, plus
//! landing-point extrapolation.
//!
//! A dynamic ray point at `(θ, t)` is pulled back through the dynamics: the
//! tracer keeps a ladder of points at `(2^j θ, 2^j t)`, anchors the deepest
//! level inside the linearization disk, and solves `f_a(z) = w` one level at
//! a time with Newton seeded at the previous accepted point on that level
//! ("nearest preimage" branch selection). Steps that fail Newton or the
//! potential/angle validation are bisected geometrically, up to a budget;
//! a stalled trace reports its last accepted point rather than
//! extrapolating silently.
//!
//! Parameter rays invert `Φ(a) = r e^{2πiθ}` by Newton in `a`, seeded by the
//! small-`r` asymptote `a ≈ -√2 r e^{2πiθ}` and continued geometrically in
//! `1 - r`; `∂Φ/∂a` comes from central finite differences, as `Φ` depends on
//! `a` through the whole orbit.

use std::fmt;

use serde::Serialize;

use crate::angles::{circle_distance, RationalAngle};
use crate::boettcher::{self, PotentialConfig};
use crate::family::{self, Parameter};
use crate::{lit, to_f64, Complex, Real};

/// One accepted ray sample: `green(point) = potential` to trace tolerance.
#[derive(Clone, Copy, Debug)]
pub struct RayPoint<T: Real> {
    pub potential: T,
    pub point: Complex<T>,
}

/// Which ray a trace followed.
#[derive(Clone, Copy, Debug)]
pub enum RayKind<T: Real> {
    Dynamic { a: Parameter<T> },
    Parameter,
}

/// Why a trace stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StallReason {
    NewtonDiverged,
    LeftBasin,
    LeftComponent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceStatus {
    Complete,
    Stalled(StallReason),
}

/// Ordered ray samples (potentials strictly increasing) plus outcome.
#[derive(Clone, Debug)]
pub struct RayTrace<T: Real> {
    pub angle: RationalAngle,
    pub kind: RayKind<T>,
    pub points: Vec<RayPoint<T>>,
    pub status: TraceStatus,
}

/// Errors from post-processing traces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RayError {
    /// Landing extrapolation needs a completed trace with at least four
    /// points near the end of its schedule.
    InsufficientData,
}

impl fmt::Display for RayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RayError::InsufficientData => {
                write!(f, "landing extrapolation needs >= 4 points of a completed trace")
            }
        }
    }
}

impl std::error::Error for RayError {}

/// Tolerances and budgets of the continuation.
#[derive(Clone, Copy, Debug)]
pub struct TraceConfig<T: Real> {
    pub potential: PotentialConfig<T>,
    /// Newton residual tolerance (relative to the target scale).
    pub newton_tol: T,
    pub max_newton_iters: u32,
    /// Step bisection budget per schedule step.
    pub max_bisections: u32,
    /// Accepted points must reproduce their potential and angle this well.
    pub validate_tol: T,
}

impl<T: Real> Default for TraceConfig<T> {
    fn default() -> Self {
        Self {
            potential: PotentialConfig::tight(),
            newton_tol: lit(1e-12),
            max_newton_iters: 24,
            max_bisections: 40,
            validate_tol: lit(1e-8),
        }
    }
}

/// Solve `f_a(z) = target` from `seed`.
fn newton_preimage<T: Real>(
    a: Parameter<T>,
    target: Complex<T>,
    seed: Complex<T>,
    cfg: &TraceConfig<T>,
) -> Result<Complex<T>, StallReason> {
    let scale = T::one() + target.norm();
    let mut z = seed;
    let mut polish = false;
    for _ in 0..cfg.max_newton_iters + 1 {
        let res = family::eval(a, z) - target;
        if res.norm() <= cfg.newton_tol * scale {
            if polish {
                return Ok(z);
            }
            // one more contraction past the tolerance stabilizes retraces
            polish = true;
        }
        let d = family::deriv_z(a, z);
        let dn = d.norm();
        if !dn.is_finite() || dn < lit(1e-290) {
            return Err(StallReason::NewtonDiverged);
        }
        z = z - res / d;
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(StallReason::NewtonDiverged);
        }
        if z.norm() > cfg.potential.escape_bound {
            return Err(StallReason::LeftBasin);
        }
    }
    if polish {
        return Ok(z);
    }
    Err(StallReason::NewtonDiverged)
}

/// Continuation state for one dynamic ray.
pub struct DynamicRayTracer<T: Real> {
    a: Parameter<T>,
    theta: RationalAngle,
    cfg: TraceConfig<T>,
    /// Doubled angles, level `j` holding `2^j θ`.
    angles: Vec<RationalAngle>,
    /// Last accepted point per ladder level.
    seeds: Vec<Option<Complex<T>>>,
    /// Potential of the last accepted step, once any.
    t_current: Option<T>,
    /// Potential below which the local-series anchor is trusted.
    t_deep: T,
}

impl<T: Real> DynamicRayTracer<T> {
    pub fn new(a: Parameter<T>, theta: RationalAngle, cfg: &TraceConfig<T>) -> Self {
        // anchor modulus |z| <= 4e-4/|a| * |a| keeps the cubic-model error
        // of the anchor below validation tolerances
        let t_deep = (lit::<T>(2e-4) * a.modulus()).ln();
        Self {
            a,
            theta,
            cfg: *cfg,
            angles: vec![theta],
            seeds: Vec::new(),
            t_current: None,
            t_deep,
        }
    }

    pub fn angle(&self) -> RationalAngle {
        self.theta
    }

    fn angle_at(&mut self, level: usize) -> RationalAngle {
        while self.angles.len() <= level {
            let last = *self.angles.last().expect("nonempty");
            self.angles.push(last.double());
        }
        self.angles[level]
    }

    /// Inverse of the local conjugacy model: the point of potential `t` and
    /// angle `ang` inside the linearization disk.
    fn anchor_point(&mut self, t: T, level: usize) -> Complex<T> {
        let ang = self.angle_at(level);
        let tau = T::PI() + T::PI();
        let zeta = Complex::from_polar(t.exp(), tau * lit::<T>(ang.to_f64()));
        let a = self.a.value();
        let half_a = a * lit::<T>(0.5);
        let third = lit::<T>(1.0 / 3.0);
        let c2 = Complex::new(lit::<T>(5.0 / 72.0), T::zero()) + a * lit::<T>(1.0 / 12.0);
        let mut z = zeta / half_a;
        z = z * (Complex::new(T::one(), T::zero()) - z * third);
        // polish against the cubic local model
        for _ in 0..4 {
            let val = half_a * (z + z * z * third + c2 * z * z * z);
            let deriv = half_a
                * (Complex::new(T::one(), T::zero())
                    + z * (third + third)
                    + c2 * z * z * lit::<T>(3.0));
            z = z - (val - zeta) / deriv;
        }
        z
    }

    /// Depth `m` with `2^m t` at or below the anchor potential.
    fn depth(&self, t: T) -> usize {
        let two = lit::<T>(2.0);
        let mut m = 0usize;
        let mut tt = t;
        while tt > self.t_deep {
            tt = tt * two;
            m += 1;
        }
        m
    }

    /// One committed move of the whole ladder to potential `t`.
    fn step(&mut self, t: T) -> Result<Complex<T>, StallReason> {
        let m = self.depth(t);
        let two = lit::<T>(2.0);
        if self.seeds.len() < m + 1 {
            self.seeds.resize(m + 1, None);
        }
        let mut new_points: Vec<Complex<T>> = vec![Complex::new(T::zero(), T::zero()); m + 1];
        let t_top = t * two.powi(m as i32);
        let mut w = self.anchor_point(t_top, m);
        new_points[m] = w;
        for j in (0..m).rev() {
            let t_j = t * two.powi(j as i32);
            let seed = match self.seeds[j] {
                Some(s) => s,
                None => self.anchor_point(t_j, j),
            };
            w = newton_preimage(self.a, w, seed, &self.cfg)?;
            new_points[j] = w;
        }
        // validate the level-0 point against potential and angle
        let g = boettcher::green(self.a, w, &self.cfg.potential)
            .map_err(|_| StallReason::NewtonDiverged)?;
        if (g - t).abs() > self.cfg.validate_tol * (T::one() + t.abs()) {
            return Err(StallReason::NewtonDiverged);
        }
        let ang = boettcher::external_angle(self.a, w, &self.cfg.potential)
            .map_err(|_| StallReason::NewtonDiverged)?;
        let d = lit::<T>(circle_distance(to_f64(ang), self.theta.to_f64()));
        if d > self.cfg.validate_tol {
            return Err(StallReason::NewtonDiverged);
        }
        for (j, p) in new_points.into_iter().enumerate() {
            self.seeds[j] = Some(p);
        }
        self.t_current = Some(t);
        Ok(w)
    }

    /// Advance to potential `t` (negative), bisecting stalled steps
    /// geometrically up to the configured budget.
    pub fn advance_to(&mut self, t: T) -> Result<RayPoint<T>, StallReason> {
        debug_assert!(t < T::zero());
        if self.t_current.is_none() {
            // enter the ladder at a deep anchor first
            let t0 = if t < self.t_deep { t } else { self.t_deep };
            self.step(t0)?;
        }
        let mut pending = vec![t];
        let mut bisections = 0u32;
        while let Some(&target) = pending.last() {
            let from = self.t_current.expect("initialized above");
            if target <= from {
                // schedule midpoints can land behind the current potential;
                // re-stepping to them is harmless but unnecessary
                pending.pop();
                continue;
            }
            match self.step(target) {
                Ok(_) => {
                    pending.pop();
                }
                Err(e) => {
                    bisections += 1;
                    if bisections > self.cfg.max_bisections {
                        return Err(e);
                    }
                    let mid = -(from * target).sqrt();
                    if !(mid > from && mid < target) {
                        return Err(e);
                    }
                    pending.push(mid);
                }
            }
        }
        let t_final = self.t_current.expect("stepped");
        let point = self.seeds[0].expect("level 0 populated");
        Ok(RayPoint {
            potential: t_final,
            point,
        })
    }
}

/// Trace the internal dynamic ray of angle `θ` over a geometric potential
/// schedule from `t_start` to `t_end` (both negative, increasing).
pub fn trace_dynamic_ray<T: Real>(
    a: Parameter<T>,
    theta: RationalAngle,
    t_start: T,
    t_end: T,
    steps: u32,
    cfg: &TraceConfig<T>,
) -> RayTrace<T> {
    assert!(
        t_start < t_end && t_end < T::zero(),
        "need t_start < t_end < 0"
    );
    assert!(steps >= 1);
    let mut tracer = DynamicRayTracer::new(a, theta, cfg);
    let mut points = Vec::with_capacity(steps as usize);
    let mut status = TraceStatus::Complete;
    let l0 = (-t_start).ln();
    let l1 = (-t_end).ln();
    for i in 0..steps {
        let t = if steps == 1 {
            t_end
        } else {
            let frac = lit::<T>(i as f64 / (steps - 1) as f64);
            -(l0 + (l1 - l0) * frac).exp()
        };
        match tracer.advance_to(t) {
            Ok(p) => points.push(p),
            Err(reason) => {
                status = TraceStatus::Stalled(reason);
                break;
            }
        }
    }
    RayTrace {
        angle: theta,
        kind: RayKind::Dynamic { a },
        points,
        status,
    }
}

/// Continuation state for one parameter ray.
pub struct ParameterRayTracer<T: Real> {
    theta: RationalAngle,
    cfg: TraceConfig<T>,
    a_current: Option<Complex<T>>,
    r_current: Option<T>,
    /// Length of the last accepted continuation step, used to scale the
    /// finite-difference stencil when `Φ` flattens toward the boundary.
    last_step: Option<T>,
    /// Conjugation symmetry pins the rays of angle 0 and 1/2 to the real
    /// axis; the continuation stays exactly on it.
    real_ray: bool,
}

impl<T: Real> ParameterRayTracer<T> {
    pub fn new(theta: RationalAngle, cfg: &TraceConfig<T>) -> Self {
        Self {
            theta,
            cfg: *cfg,
            a_current: None,
            r_current: None,
            last_step: None,
            real_ray: theta.denominator() <= 2,
        }
    }

    fn target(&self, r: T) -> Complex<T> {
        if self.real_ray {
            // exact axis targets; from_polar would leak sin(π) noise
            let sign = if self.theta == RationalAngle::ZERO {
                T::one()
            } else {
                -T::one()
            };
            return Complex::new(sign * r, T::zero());
        }
        let tau = T::PI() + T::PI();
        Complex::from_polar(r, tau * lit::<T>(self.theta.to_f64()))
    }

    fn phi(&self, a: Complex<T>) -> Result<Complex<T>, StallReason> {
        let p = Parameter::new(a).map_err(|_| StallReason::LeftComponent)?;
        boettcher::big_phi(p, &self.cfg.potential).map_err(|_| StallReason::LeftComponent)
    }

    /// Newton in `a` for `Φ(a) = r e^{2πiθ}`, finite-difference derivative.
    fn solve_at(&self, r: T, seed: Complex<T>) -> Result<Complex<T>, StallReason> {
        let target = self.target(r);
        // strict enough for the potential/angle identities at moderate r,
        // relative to the remaining gap 1 - r close to the boundary where
        // Φ saturates
        let tol = (r * lit::<T>(1e-10))
            .min((T::one() - r) * lit(1e-2))
            .max(lit(1e-13));
        let mut a = seed;
        for _ in 0..self.cfg.max_newton_iters {
            let phi = self.phi(a)?;
            let res = phi - target;
            if res.norm() <= tol {
                return Ok(a);
            }
            // Φ' collapses toward the boundary; widen the stencil with the
            // continuation step so the difference rises above the noise
            let h = (lit::<T>(1e-7) * T::one().max(a.norm()))
                .max(self.last_step.unwrap_or(T::zero()) * lit(0.25));
            let hc = Complex::new(h, T::zero());
            let dphi = (self.phi(a + hc)? - self.phi(a - hc)?) / (hc + hc);
            let dn = dphi.norm();
            if !dn.is_finite() || dn < lit(1e-290) {
                return Err(StallReason::NewtonDiverged);
            }
            a = a - res / dphi;
            if self.real_ray {
                a = Complex::new(a.re, T::zero());
            }
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(StallReason::NewtonDiverged);
            }
        }
        Err(StallReason::NewtonDiverged)
    }

    fn step(&mut self, r: T) -> Result<(), StallReason> {
        let seed = match self.a_current {
            Some(a) => a,
            None => -self.target(r) * lit::<T>(std::f64::consts::SQRT_2),
        };
        let a = self.solve_at(r, seed)?;
        let p = Parameter::new(a).map_err(|_| StallReason::LeftComponent)?;
        if !boettcher::is_in_main_component(p, &self.cfg.potential) {
            return Err(StallReason::LeftComponent);
        }
        if let Some(prev) = self.a_current {
            self.last_step = Some((a - prev).norm());
        }
        self.a_current = Some(a);
        self.r_current = Some(r);
        Ok(())
    }

    /// Advance to radius `r ∈ (0, 1)`, bisecting stalled steps geometrically
    /// in `1 - r`.
    pub fn advance_to(&mut self, r: T) -> Result<RayPoint<T>, StallReason> {
        debug_assert!(r > T::zero() && r < T::one());
        if self.r_current.is_none() {
            let r0 = r.min(lit(0.01));
            self.step(r0)?;
        }
        let mut pending = vec![r];
        let mut bisections = 0u32;
        while let Some(&target) = pending.last() {
            let from = self.r_current.expect("initialized");
            if target <= from {
                pending.pop();
                continue;
            }
            match self.step(target) {
                Ok(()) => {
                    pending.pop();
                }
                Err(e) => {
                    bisections += 1;
                    if bisections > self.cfg.max_bisections {
                        return Err(e);
                    }
                    let mid = T::one() - ((T::one() - from) * (T::one() - target)).sqrt();
                    if !(mid > from && mid < target) {
                        return Err(e);
                    }
                    pending.push(mid);
                }
            }
        }
        let r_final = self.r_current.expect("stepped");
        Ok(RayPoint {
            potential: r_final.ln(),
            point: self.a_current.expect("stepped"),
        })
    }
}

/// Trace the internal parameter ray of angle `θ` over a schedule geometric
/// in `1 - r` from `r_start` to `r_end`.
///
/// Every accepted parameter satisfies `Φ(a) = r e^{2πiθ}` to tolerance and
/// passes the main-component membership proxy; `point` carries `a` and
/// `potential` carries `log r = g_a(1)`.
pub fn trace_parameter_ray<T: Real>(
    theta: RationalAngle,
    r_start: T,
    r_end: T,
    steps: u32,
    cfg: &TraceConfig<T>,
) -> RayTrace<T> {
    assert!(
        T::zero() < r_start && r_start < r_end && r_end < T::one(),
        "need 0 < r_start < r_end < 1"
    );
    assert!(steps >= 1);
    let mut tracer = ParameterRayTracer::new(theta, cfg);
    let mut points = Vec::with_capacity(steps as usize);
    let mut status = TraceStatus::Complete;
    let u0 = (T::one() - r_start).ln();
    let u1 = (T::one() - r_end).ln();
    for i in 0..steps {
        let r = if steps == 1 {
            r_end
        } else {
            let frac = lit::<T>(i as f64 / (steps - 1) as f64);
            T::one() - (u0 + (u1 - u0) * frac).exp()
        };
        match tracer.advance_to(r) {
            Ok(p) => points.push(p),
            Err(reason) => {
                status = TraceStatus::Stalled(reason);
                break;
            }
        }
    }
    RayTrace {
        angle: theta,
        kind: RayKind::Parameter,
        points,
        status,
    }
}

/// Iterated-Δ² extrapolation of the trace tail toward its landing value,
/// with the spread of successive extrapolants as the uncertainty estimate.
pub fn estimate_landing<T: Real>(trace: &RayTrace<T>) -> Result<(Complex<T>, T), RayError> {
    if trace.status != TraceStatus::Complete || trace.points.len() < 4 {
        return Err(RayError::InsufficientData);
    }
    let tail: Vec<Complex<T>> = trace
        .points
        .iter()
        .rev()
        .take(8)
        .rev()
        .map(|p| p.point)
        .collect();
    let mut extrapolants = Vec::new();
    for w in tail.windows(3) {
        let (x0, x1, x2) = (w[0], w[1], w[2]);
        let d2 = x2 - x1 - x1 + x0;
        let scale = x0.norm() + x1.norm() + x2.norm() + T::one();
        let e = if d2.norm() < lit::<T>(1e-14) * scale {
            x2 // constant-tail degenerate case
        } else {
            let d1 = x2 - x1;
            x2 - d1 * d1 / d2
        };
        extrapolants.push(e);
    }
    let limit = *extrapolants.last().expect(">= 2 extrapolants");
    let spread = extrapolants
        .iter()
        .rev()
        .take(3)
        .map(|e| (*e - limit).norm())
        .fold(T::zero(), |m, d| m.max(d));
    Ok((limit, spread))
}

// --- serialization -------------------------------------------------------

#[derive(Serialize)]
struct PointJson {
    potential: f64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum KindJson {
    Dynamic { a_re: f64, a_im: f64 },
    Parameter,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum StatusJson {
    Complete,
    Stalled(StallReason),
}

#[derive(Serialize)]
struct TraceJson {
    angle: String,
    kind: KindJson,
    status: StatusJson,
    points: Vec<PointJson>,
}

impl<T: Real> RayTrace<T> {
    fn as_json(&self) -> TraceJson {
        TraceJson {
            angle: self.angle.to_string(),
            kind: match self.kind {
                RayKind::Dynamic { a } => KindJson::Dynamic {
                    a_re: to_f64(a.value().re),
                    a_im: to_f64(a.value().im),
                },
                RayKind::Parameter => KindJson::Parameter,
            },
            status: match self.status {
                TraceStatus::Complete => StatusJson::Complete,
                TraceStatus::Stalled(r) => StatusJson::Stalled(r),
            },
            points: self
                .points
                .iter()
                .map(|p| PointJson {
                    potential: to_f64(p.potential),
                    re: to_f64(p.point.re),
                    im: to_f64(p.point.im),
                })
                .collect(),
        }
    }

    /// JSON document: metadata plus an array of `{potential, re, im}`.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.as_json()).expect("trace serialization")
    }

    /// CSV with a `potential,re,im` header, for plotting.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("potential,re,im\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                to_f64(p.potential),
                to_f64(p.point.re),
                to_f64(p.point.im)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Cplx;

    fn p(re: f64, im: f64) -> Parameter<f64> {
        Parameter::new(Cplx::new(re, im)).unwrap()
    }

    #[test]
    fn real_parameter_zero_ray_is_real() {
        let a = p(0.9, 0.0);
        let tr = trace_dynamic_ray(a, RationalAngle::ZERO, -8.0, -0.2, 24, &TraceConfig::default());
        assert_eq!(tr.status, TraceStatus::Complete);
        assert_eq!(tr.points.len(), 24);
        for pt in &tr.points {
            assert!(pt.point.im.abs() < 1e-10, "ray left the real axis");
            assert!(pt.point.re > 0.0, "angle-0 ray should be on the positive axis");
        }
    }

    #[test]
    fn potentials_strictly_increase() {
        let a = p(0.4, 0.6);
        let th = RationalAngle::new(1, 3).unwrap();
        let tr = trace_dynamic_ray(a, th, -7.0, -0.3, 20, &TraceConfig::default());
        assert_eq!(tr.status, TraceStatus::Complete);
        for w in tr.points.windows(2) {
            assert!(w[1].potential > w[0].potential);
        }
    }

    #[test]
    fn accepted_points_validate() {
        let a = p(0.4, 0.6);
        let th = RationalAngle::new(1, 6).unwrap();
        let cfg = TraceConfig::default();
        let tr = trace_dynamic_ray(a, th, -7.0, -0.4, 16, &cfg);
        assert_eq!(tr.status, TraceStatus::Complete);
        for pt in &tr.points {
            let g = boettcher::green(a, pt.point, &cfg.potential).unwrap();
            assert!((g - pt.potential).abs() < 1e-8);
            let ang = boettcher::external_angle(a, pt.point, &cfg.potential).unwrap();
            assert!(circle_distance(ang, th.to_f64()) < 1e-8);
        }
    }

    #[test]
    fn dynamic_ray_naturality() {
        // f_a maps the point at (θ, t) to the point at (2θ, 2t)
        let a = p(0.4, 0.6);
        let th = RationalAngle::new(1, 3).unwrap();
        let cfg = TraceConfig::default();
        let tr1 = trace_dynamic_ray(a, th, -4.0, -0.5, 9, &cfg);
        let tr2 = trace_dynamic_ray(a, th.double(), -8.0, -1.0, 9, &cfg);
        assert_eq!(tr1.status, TraceStatus::Complete);
        assert_eq!(tr2.status, TraceStatus::Complete);
        for (p1, p2) in tr1.points.iter().zip(tr2.points.iter()) {
            let image = family::eval(a, p1.point);
            assert!(
                (image - p2.point).norm() < 1e-7,
                "naturality off by {}",
                (image - p2.point).norm()
            );
        }
    }

    #[test]
    fn retrace_stability() {
        let a = p(0.4, 0.6);
        let th = RationalAngle::new(1, 3).unwrap();
        let cfg = TraceConfig::default();
        let coarse = trace_dynamic_ray(a, th, -6.0, -0.4, 10, &cfg);
        let fine = trace_dynamic_ray(a, th, -6.0, -0.4, 19, &cfg);
        // fine schedule visits the coarse potentials at even indices
        for (i, pc) in coarse.points.iter().enumerate() {
            let pf = &fine.points[2 * i];
            assert!((pc.potential - pf.potential).abs() < 1e-12);
            assert!((pc.point - pf.point).norm() < 1e-8);
        }
    }

    #[test]
    fn parameter_ray_asymptote_and_identity() {
        let th = RationalAngle::new(1, 2).unwrap();
        let cfg = TraceConfig::default();
        let mut tracer = ParameterRayTracer::new(th, &cfg);
        let pt = tracer.advance_to(1e-3).unwrap();
        // Φ(a) = -r for θ = 1/2, so a ≈ √2 r on the positive real axis
        let expected = std::f64::consts::SQRT_2 * 1e-3;
        assert!(
            (pt.point.re - expected).abs() / expected < 1e-2,
            "asymptote violated: {} vs {}",
            pt.point.re,
            expected
        );
        assert!(pt.point.im.abs() < 1e-12);
    }

    #[test]
    fn parameter_trace_correspondence() {
        let th = RationalAngle::new(1, 3).unwrap();
        let cfg = TraceConfig::<f64>::default();
        let tr = trace_parameter_ray(th, 1e-3, 0.9, 32, &cfg);
        assert_eq!(tr.status, TraceStatus::Complete);
        assert_eq!(tr.points.len(), 32);
        for pt in &tr.points {
            let a = Parameter::new(pt.point).unwrap();
            let r = pt.potential.exp();
            let ga = boettcher::green(a, a.value(), &cfg.potential).unwrap();
            assert!(
                (ga - 2.0 * r.ln()).abs() < 1e-6,
                "g_a(a) = {ga} vs 2 log r = {}",
                2.0 * r.ln()
            );
            let ang = boettcher::external_angle(a, a.value(), &cfg.potential).unwrap();
            let want = th.double().to_f64();
            assert!(circle_distance(ang, want) < 1e-6);
            assert!(pt.point.norm() < 9.24);
        }
    }

    #[test]
    fn landing_extrapolation_on_synthetic_tail() {
        // geometric tail a_k = L + c q^k
        let th = RationalAngle::new(1, 2).unwrap();
        let limit = Cplx::new(1.0, -0.5);
        let c = Cplx::new(0.3, 0.2);
        let mut points = Vec::new();
        let mut q = 1.0;
        for k in 0..8 {
            q *= 0.5;
            points.push(RayPoint {
                potential: -(k as f64),
                point: limit + c * q,
            });
        }
        let tr = RayTrace {
            angle: th,
            kind: RayKind::Parameter,
            points,
            status: TraceStatus::Complete,
        };
        let (l, u) = estimate_landing(&tr).unwrap();
        assert!((l - limit).norm() < 1e-12, "Aitken should nail geometric tails");
        assert!(u < 1e-10);

        // constant tail: the constant with zero uncertainty
        let tr_const = RayTrace {
            angle: th,
            kind: RayKind::Parameter,
            points: (0..6)
                .map(|k| RayPoint {
                    potential: -(k as f64),
                    point: limit,
                })
                .collect(),
            status: TraceStatus::Complete,
        };
        let (l, u) = estimate_landing(&tr_const).unwrap();
        assert_eq!(l, limit);
        assert_eq!(u, 0.0);

        // too short
        let mut short = tr_const;
        short.points.truncate(3);
        assert_eq!(estimate_landing(&short), Err(RayError::InsufficientData));
    }

    #[test]
    fn trace_serialization_shapes() {
        let th = RationalAngle::new(1, 2).unwrap();
        let tr: RayTrace<f64> = RayTrace {
            angle: th,
            kind: RayKind::Parameter,
            points: vec![RayPoint {
                potential: -0.5,
                point: Cplx::new(0.25, 0.0),
            }],
            status: TraceStatus::Complete,
        };
        let json = tr.to_json_string();
        assert!(json.contains("\"angle\": \"1/2\""));
        assert!(json.contains("\"potential\": -0.5"));
        let csv = tr.to_csv_string();
        assert_eq!(csv, "potential,re,im\n-0.5,0.25,0\n");
    }
}
