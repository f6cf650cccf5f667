//! Landing-point solvers for rational internal parameter rays.
//!
//! Every rational ray lands at a boundary parameter of the main component,
//! and the preperiod `l` of the angle decides which equation the landing
//! parameter satisfies:
//!
//! * `l = 0`: a parabolic cycle, `f_a^q(z) = z` with `(f_a^q)'(z) = 1`,
//!   solved as a two-complex-dimensional Newton system in `(a, z)`;
//! * `l = 1`: the asymptotic value lies in a repelling `q`-cycle through
//!   the preimage `1`, solved from `f_a^{q-1}(a) = 1` in `a` alone;
//! * `l > 1`: a strictly preperiodic asymptotic value,
//!   `f_a^{e}(a) = f_a^{e+q}(a)` with `e = l - 1` (a configuration switch
//!   selects `e = l` instead; both indexing conventions are in circulation
//!   and neither is guessed to be minimal).
//!
//! These equations have many roots; solvers are seeded from ray-trace
//! extrapolations so continuation selects the landed one. Derivatives are
//! propagated in closed form through the orbit; no numerical
//! differentiation happens inside solvers.

use std::fmt;

use serde::Serialize;

use crate::angles::RationalAngle;
use crate::family::{self, Parameter};
use crate::rays::{self, RayTrace, TraceConfig, TraceStatus};
use crate::{lit, to_f64, Complex, Real};

/// Which landing case a rational angle falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseSelector {
    Parabolic { q: u32 },
    Repelling { q: u32 },
    Misiurewicz { l: u32, q: u32 },
}

/// Dispatch on the preperiod/period of the doubling orbit.
pub fn classify_angle(theta: RationalAngle) -> CaseSelector {
    let (l, q) = theta.preperiod_period();
    match l {
        0 => CaseSelector::Parabolic { q },
        1 => CaseSelector::Repelling { q },
        _ => CaseSelector::Misiurewicz { l, q },
    }
}

/// Indexing convention for the preperiodic-case equation exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexConvention {
    /// Solve `f^{l-1}(a) = f^{l-1+q}(a)`.
    #[default]
    PreperiodMinusOne,
    /// Solve `f^{l}(a) = f^{l+q}(a)`.
    Preperiod,
}

/// Solver tolerances and policies.
#[derive(Clone, Copy, Debug)]
pub struct SolveConfig<T: Real> {
    /// Newton residual target.
    pub tol: T,
    pub max_iters: u32,
    /// Threshold separating genuine earlier coincidences from solver noise.
    pub minimality_tol: T,
    pub convention: IndexConvention,
}

impl<T: Real> Default for SolveConfig<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-12),
            max_iters: 64,
            minimality_tol: lit(1e-6),
            convention: IndexConvention::default(),
        }
    }
}

/// Case data of a solved landing parameter.
#[derive(Clone, Debug)]
pub enum LandingCase<T: Real> {
    Parabolic { q: u32, cycle_point: Complex<T> },
    RepellingCycle { q: u32 },
    Misiurewicz { l: u32, q: u32, landing_orbit_point: Complex<T> },
}

/// A solved boundary parameter with residuals and multiplier.
#[derive(Clone, Debug)]
pub struct LandingResult<T: Real> {
    pub angle: RationalAngle,
    pub case: LandingCase<T>,
    pub parameter: Complex<T>,
    /// Max norm of the defining equations at the returned root.
    pub residual: T,
    /// Multiplier of the associated cycle.
    pub multiplier: Complex<T>,
    /// Minimality-check transcript.
    pub transcript: Vec<String>,
    /// False when a check produced an inconsistent observation (for
    /// example an attracting cycle at a boundary parameter).
    pub consistent: bool,
}

/// Solver failures.
#[derive(Debug, Clone)]
pub enum SolveError {
    NewtonDiverged { detail: String },
    /// Root found, but the cycle period properly divides `q`.
    NonMinimalPeriod { divisor: u32 },
    /// Root found, but the orbit coincidence happens before the required
    /// index.
    NonMinimal { at: u32 },
    /// Root found, but the cycle is not repelling.
    NotRepelling { multiplier_norm: f64 },
    WrongCase { expected: &'static str },
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NewtonDiverged { detail } => write!(f, "newton diverged: {detail}"),
            SolveError::NonMinimalPeriod { divisor } => {
                write!(f, "cycle period properly divides q (divisor {divisor})")
            }
            SolveError::NonMinimal { at } => {
                write!(f, "orbit coincidence already at index {at}")
            }
            SolveError::NotRepelling { multiplier_norm } => {
                write!(f, "cycle not repelling (|multiplier| = {multiplier_norm})")
            }
            SolveError::WrongCase { expected } => {
                write!(f, "angle class mismatch: solver expects the {expected} case")
            }
        }
    }
}

impl std::error::Error for SolveError {}

const SOLVER_ESCAPE: f64 = 1e8;

/// Orbit of the asymptotic value with `d/da` propagated: entry `k` holds
/// `(f_a^k(a), d f_a^k(a)/da)` for `k = 0..=n`.
fn orbit_of_a_with_da<T: Real>(
    a: Parameter<T>,
    n: u32,
) -> Result<Vec<(Complex<T>, Complex<T>)>, SolveError> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut w = a.value();
    let mut dw = Complex::new(T::one(), T::zero());
    out.push((w, dw));
    for _ in 0..n {
        let fz = family::deriv_z(a, w);
        let fa = family::deriv_a(a, w);
        dw = fa + fz * dw;
        w = family::eval(a, w);
        if w.norm() > lit(SOLVER_ESCAPE) {
            return Err(SolveError::NewtonDiverged {
                detail: "orbit escaped during propagation".into(),
            });
        }
        out.push((w, dw));
    }
    Ok(out)
}

/// Multiplier of the `q`-cycle through `z` with its `(∂/∂z, ∂/∂a)`:
/// propagates `(w, ∂w/∂z, ∂w/∂a)` and accumulates the product of `f'` by
/// log-derivative sums.
struct CycleData<T: Real> {
    end: Complex<T>,
    d_end_dz: Complex<T>,
    d_end_da: Complex<T>,
    multiplier: Complex<T>,
    d_mult_dz: Complex<T>,
    d_mult_da: Complex<T>,
    points: Vec<Complex<T>>,
}

fn cycle_data<T: Real>(a: Parameter<T>, z: Complex<T>, q: u32) -> Result<CycleData<T>, SolveError> {
    let mut w = z;
    let mut dwz = Complex::new(T::one(), T::zero());
    let mut dwa = Complex::new(T::zero(), T::zero());
    let mut mult = Complex::new(T::one(), T::zero());
    let mut sum_z = Complex::new(T::zero(), T::zero());
    let mut sum_a = Complex::new(T::zero(), T::zero());
    let mut points = Vec::with_capacity(q as usize);
    for _ in 0..q {
        points.push(w);
        let fz = family::deriv_z(a, w);
        if fz.norm() < lit(1e-280) {
            return Err(SolveError::NewtonDiverged {
                detail: "cycle passes through the critical point".into(),
            });
        }
        let fzz = family::deriv_zz(a, w);
        let fza = family::deriv_za(a, w);
        let fa = family::deriv_a(a, w);
        mult = mult * fz;
        sum_z = sum_z + (fzz * dwz) / fz;
        sum_a = sum_a + (fzz * dwa + fza) / fz;
        dwa = fa + fz * dwa;
        dwz = fz * dwz;
        w = family::eval(a, w);
        if w.norm() > lit(SOLVER_ESCAPE) {
            return Err(SolveError::NewtonDiverged {
                detail: "cycle iterate escaped".into(),
            });
        }
    }
    Ok(CycleData {
        end: w,
        d_end_dz: dwz,
        d_end_da: dwa,
        multiplier: mult,
        d_mult_dz: mult * sum_z,
        d_mult_da: mult * sum_a,
        points,
    })
}

fn proper_divisors(q: u32) -> impl Iterator<Item = u32> {
    (1..q).filter(move |d| q % d == 0)
}

/// Solve the parabolic case (`l = 0`): Newton on
/// `F(a, z) = (f_a^q(z) - z, (f_a^q)'(z) - 1)`.
///
/// Postconditions: residual below tolerance, exact period `q` (no proper
/// divisor fixes `z`), multiplier within tolerance of 1.
pub fn solve_parabolic<T: Real>(
    theta: RationalAngle,
    seed_a: Complex<T>,
    seed_z: Complex<T>,
    cfg: &SolveConfig<T>,
) -> Result<LandingResult<T>, SolveError> {
    let q = match classify_angle(theta) {
        CaseSelector::Parabolic { q } => q,
        _ => return Err(SolveError::WrongCase { expected: "parabolic" }),
    };
    let one = Complex::new(T::one(), T::zero());
    let mut a = seed_a;
    let mut z = seed_z;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let p = Parameter::new(a).map_err(|e| SolveError::NewtonDiverged {
            detail: e.to_string(),
        })?;
        // the trap disk certifiably contains no parabolic point; iterates
        // falling into it are sliding toward the superattractor
        if z.norm() < crate::planes::trap_radius(p) {
            return Err(SolveError::NewtonDiverged {
                detail: "iterate entered the superattracting trap".into(),
            });
        }
        let c = cycle_data(p, z, q)?;
        let f1 = c.end - z;
        let f2 = c.multiplier - one;
        if f1.norm() + f2.norm() <= cfg.tol {
            converged = true;
            break;
        }
        let j11 = c.d_end_dz - one;
        let j12 = c.d_end_da;
        let j21 = c.d_mult_dz;
        let j22 = c.d_mult_da;
        let det = j11 * j22 - j12 * j21;
        if det.norm() < lit(1e-280) {
            return Err(SolveError::NewtonDiverged {
                detail: "singular Jacobian".into(),
            });
        }
        let mut dz = (f2 * j12 - f1 * j22) / det;
        let mut da = (f1 * j21 - f2 * j11) / det;
        let cap = lit::<T>(0.4) * (T::one() + z.norm());
        let step = (dz.norm_sqr() + da.norm_sqr()).sqrt();
        if step > cap {
            dz = dz * (cap / step);
            da = da * (cap / step);
        }
        z = z + dz;
        a = a + da;
        if !a.is_finite() || !z.is_finite() || a.norm() > lit(SOLVER_ESCAPE) {
            return Err(SolveError::NewtonDiverged {
                detail: "iterate left the search region".into(),
            });
        }
    }
    if !converged {
        return Err(SolveError::NewtonDiverged {
            detail: format!("no convergence in {} iterations", cfg.max_iters),
        });
    }
    let p = Parameter::new(a).map_err(|e| SolveError::NewtonDiverged {
        detail: e.to_string(),
    })?;
    let c = cycle_data(p, z, q)?;
    let residual = (c.end - z).norm().max((c.multiplier - one).norm());
    let mut transcript = Vec::new();
    // exact period: no proper divisor of q may fix z
    let mut gap_min = T::infinity();
    for d in proper_divisors(q) {
        let cd = cycle_data(p, z, d)?;
        let gap = (cd.end - z).norm();
        gap_min = gap_min.min(gap);
        if gap < cfg.minimality_tol {
            return Err(SolveError::NonMinimalPeriod { divisor: d });
        }
    }
    if q > 1 {
        transcript.push(format!(
            "exact period {q}: smallest proper-divisor gap {:.3e}",
            to_f64(gap_min)
        ));
    } else {
        transcript.push("exact period 1 (no proper divisors)".into());
    }
    transcript.push(format!(
        "parabolic system residual {:.3e}, multiplier offset {:.3e}",
        to_f64((c.end - z).norm()),
        to_f64((c.multiplier - one).norm())
    ));
    Ok(LandingResult {
        angle: theta,
        case: LandingCase::Parabolic { q, cycle_point: z },
        parameter: a,
        residual,
        multiplier: c.multiplier,
        transcript,
        consistent: true,
    })
}

/// Solve the repelling-cycle case (`l = 1`): `f_a^{q-1}(a) = 1` in `a`.
///
/// For `q = 1` the equation degenerates to `a = 1` and is returned in
/// closed form. The solved cycle `a → f(a) → … → 1 → a` closes identically
/// because `f_a(1) = a`; the solver verifies exact period `q` and that the
/// multiplier is repelling.
pub fn solve_repelling<T: Real>(
    theta: RationalAngle,
    seed_a: Complex<T>,
    cfg: &SolveConfig<T>,
) -> Result<LandingResult<T>, SolveError> {
    let q = match classify_angle(theta) {
        CaseSelector::Repelling { q } => q,
        _ => return Err(SolveError::WrongCase { expected: "repelling-cycle" }),
    };
    let one = Complex::new(T::one(), T::zero());
    let mut a;
    if q == 1 {
        // f_a^0(a) = a = 1 exactly
        a = one;
    } else {
        a = seed_a;
        let mut converged = false;
        for _ in 0..cfg.max_iters {
            let p = Parameter::new(a).map_err(|e| SolveError::NewtonDiverged {
                detail: e.to_string(),
            })?;
            let orbit = orbit_of_a_with_da(p, q - 1)?;
            let (w, dw) = orbit[q as usize - 1];
            let res = w - one;
            if res.norm() <= cfg.tol {
                converged = true;
                break;
            }
            if dw.norm() < lit(1e-280) {
                return Err(SolveError::NewtonDiverged {
                    detail: "vanishing total derivative".into(),
                });
            }
            a = a - res / dw;
            if !a.is_finite() || a.norm() > lit(SOLVER_ESCAPE) {
                return Err(SolveError::NewtonDiverged {
                    detail: "iterate left the search region".into(),
                });
            }
        }
        if !converged {
            return Err(SolveError::NewtonDiverged {
                detail: format!("no convergence in {} iterations", cfg.max_iters),
            });
        }
    }
    let p = Parameter::new(a).map_err(|e| SolveError::NewtonDiverged {
        detail: e.to_string(),
    })?;
    let orbit = orbit_of_a_with_da(p, q)?;
    let residual = (orbit[q as usize - 1].0 - one).norm();
    let closure = (orbit[q as usize].0 - a).norm();
    let c = cycle_data(p, a, q)?;
    let mut transcript = vec![format!(
        "cycle closes through the preimage: |f^q(a) - a| = {:.3e}",
        to_f64(closure)
    )];
    // exact period: the q cycle points must be pairwise distinct
    let mut pair_min = T::infinity();
    for i in 0..c.points.len() {
        for j in (i + 1)..c.points.len() {
            pair_min = pair_min.min((c.points[i] - c.points[j]).norm());
        }
    }
    if q > 1 {
        if pair_min < cfg.minimality_tol {
            return Err(SolveError::NonMinimalPeriod {
                divisor: proper_divisors(q).next_back_or(1),
            });
        }
        transcript.push(format!(
            "exact period {q}: minimal pairwise cycle gap {:.3e}",
            to_f64(pair_min)
        ));
    } else {
        transcript.push("exact period 1".into());
    }
    let mult_norm = c.multiplier.norm();
    if mult_norm <= T::one() {
        return Err(SolveError::NotRepelling {
            multiplier_norm: to_f64(mult_norm),
        });
    }
    transcript.push(format!("repelling: |multiplier| = {}", to_f64(mult_norm)));
    Ok(LandingResult {
        angle: theta,
        case: LandingCase::RepellingCycle { q },
        parameter: a,
        residual,
        multiplier: c.multiplier,
        transcript,
        consistent: true,
    })
}

trait NextBackOr: Iterator<Item = u32> + Sized {
    fn next_back_or(self, fallback: u32) -> u32 {
        self.last().unwrap_or(fallback)
    }
}
impl<I: Iterator<Item = u32>> NextBackOr for I {}

/// Solve the preperiodic case (`l > 1`): Newton on
/// `G(a) = f_a^{e+q}(a) - f_a^{e}(a)`, `e` from the indexing convention.
///
/// Rejects roots with an earlier coincidence (`m < e`), with a cycle period
/// properly dividing `q`, or with a periodic (not strictly preperiodic)
/// asymptotic value; flags an attracting cycle as inconsistent.
pub fn solve_misiurewicz<T: Real>(
    theta: RationalAngle,
    seed_a: Complex<T>,
    cfg: &SolveConfig<T>,
) -> Result<LandingResult<T>, SolveError> {
    let (l, q) = match classify_angle(theta) {
        CaseSelector::Misiurewicz { l, q } => (l, q),
        _ => return Err(SolveError::WrongCase { expected: "preperiodic" }),
    };
    let e = match cfg.convention {
        IndexConvention::PreperiodMinusOne => l - 1,
        IndexConvention::Preperiod => l,
    };
    let n = e + q;
    let mut a = seed_a;
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let p = Parameter::new(a).map_err(|err| SolveError::NewtonDiverged {
            detail: err.to_string(),
        })?;
        let orbit = orbit_of_a_with_da(p, n)?;
        let (we, dwe) = orbit[e as usize];
        let (wn, dwn) = orbit[n as usize];
        let res = wn - we;
        if res.norm() <= cfg.tol {
            converged = true;
            break;
        }
        let dg = dwn - dwe;
        if dg.norm() < lit(1e-280) {
            return Err(SolveError::NewtonDiverged {
                detail: "vanishing total derivative".into(),
            });
        }
        a = a - res / dg;
        if !a.is_finite() || a.norm() > lit(SOLVER_ESCAPE) {
            return Err(SolveError::NewtonDiverged {
                detail: "iterate left the search region".into(),
            });
        }
    }
    if !converged {
        return Err(SolveError::NewtonDiverged {
            detail: format!("no convergence in {} iterations", cfg.max_iters),
        });
    }
    let p = Parameter::new(a).map_err(|err| SolveError::NewtonDiverged {
        detail: err.to_string(),
    })?;
    let orbit = orbit_of_a_with_da(p, n)?;
    let residual = (orbit[n as usize].0 - orbit[e as usize].0).norm();
    let mut transcript = Vec::new();
    // no earlier coincidence: |f^{m+q}(a) - f^m(a)| stays large for m < e
    let mut min_early = T::infinity();
    for m in 0..e {
        let gap = (orbit[(m + q) as usize].0 - orbit[m as usize].0).norm();
        min_early = min_early.min(gap);
        if gap < cfg.minimality_tol {
            return Err(SolveError::NonMinimal { at: m });
        }
    }
    transcript.push(format!(
        "strict preperiodicity: smallest earlier coincidence gap {:.3e} over m < {e}",
        to_f64(min_early)
    ));
    let x = orbit[e as usize].0;
    // exact period of the landing cycle
    let mut div_min = T::infinity();
    for d in proper_divisors(q) {
        let cd = cycle_data(p, x, d)?;
        let gap = (cd.end - x).norm();
        div_min = div_min.min(gap);
        if gap < cfg.minimality_tol {
            return Err(SolveError::NonMinimalPeriod { divisor: d });
        }
    }
    if q > 1 {
        transcript.push(format!(
            "exact cycle period {q}: smallest proper-divisor gap {:.3e}",
            to_f64(div_min)
        ));
    } else {
        transcript.push("exact cycle period 1".into());
    }
    let c = cycle_data(p, x, q)?;
    let mult_norm = c.multiplier.norm();
    let mut consistent = true;
    if mult_norm < T::one() - lit(1e-9) {
        // an attracting cycle cannot absorb the asymptotic value at a
        // boundary parameter; surface the inconsistency instead of hiding it
        transcript.push(format!(
            "INCONSISTENT: landing cycle attracting, |multiplier| = {}",
            to_f64(mult_norm)
        ));
        consistent = false;
    } else {
        transcript.push(format!(
            "cycle multiplier |m| = {} (repelling or parabolic)",
            to_f64(mult_norm)
        ));
    }
    Ok(LandingResult {
        angle: theta,
        case: LandingCase::Misiurewicz {
            l,
            q,
            landing_orbit_point: x,
        },
        parameter: a,
        residual,
        multiplier: c.multiplier,
        transcript,
        consistent,
    })
}

/// Agreement report between a solved landing point and the ray-trace
/// extrapolation; always produced, never an error.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub angle: String,
    pub extrapolated: [f64; 2],
    pub extrapolation_uncertainty: f64,
    pub solved: [f64; 2],
    pub distance: f64,
    pub tolerance: f64,
    pub residual: f64,
    /// False when the trace or the result carries a different angle than
    /// requested.
    pub angle_consistent: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Compare `estimate_landing(trace)` with a solver result at `tolerance`.
pub fn verify_landing<T: Real>(
    theta: RationalAngle,
    result: &LandingResult<T>,
    trace: &RayTrace<T>,
    tolerance: T,
) -> VerifyReport {
    let mut notes = Vec::new();
    let mut angle_consistent = true;
    if trace.angle != theta {
        angle_consistent = false;
        notes.push(format!(
            "trace angle {} does not match requested {theta}",
            trace.angle
        ));
    }
    if result.angle != theta {
        angle_consistent = false;
        notes.push(format!(
            "result angle {} does not match requested {theta}",
            result.angle
        ));
    }
    let (extrapolated, uncertainty, distance) = match rays::estimate_landing(trace) {
        Ok((e, u)) => (
            [to_f64(e.re), to_f64(e.im)],
            to_f64(u),
            to_f64((e - result.parameter).norm()),
        ),
        Err(err) => {
            notes.push(err.to_string());
            ([f64::NAN, f64::NAN], f64::NAN, f64::NAN)
        }
    };
    let pass = angle_consistent && distance.is_finite() && distance <= to_f64(tolerance);
    VerifyReport {
        angle: theta.to_string(),
        extrapolated,
        extrapolation_uncertainty: uncertainty,
        solved: [to_f64(result.parameter.re), to_f64(result.parameter.im)],
        distance,
        tolerance: to_f64(tolerance),
        residual: to_f64(result.residual),
        angle_consistent,
        pass,
        notes,
    }
}

/// End-to-end landing pipeline configuration.
#[derive(Clone, Copy, Debug)]
pub struct LandConfig<T: Real> {
    pub trace: TraceConfig<T>,
    pub solve: SolveConfig<T>,
    pub r_start: T,
    pub r_end: T,
    pub trace_steps: u32,
    /// Dynamic-seed ray target potential for the parabolic case.
    pub dyn_t_end: T,
    pub dyn_steps: u32,
    /// Ray-vs-solver agreement tolerance.
    pub agreement_tol: T,
}

impl<T: Real> Default for LandConfig<T> {
    fn default() -> Self {
        Self {
            trace: TraceConfig::default(),
            solve: SolveConfig::default(),
            r_start: lit(1e-3),
            r_end: lit(0.97),
            trace_steps: 80,
            dyn_t_end: lit(-2e-3),
            dyn_steps: 48,
            agreement_tol: lit(1e-2),
        }
    }
}

/// Pipeline failures.
#[derive(Debug, Clone)]
pub enum LandError {
    TraceStalled(rays::StallReason),
    Extrapolation(rays::RayError),
    Solve(SolveError),
    /// All reseeding attempts were rejected.
    NoAcceptableRoot { attempts: u32, last: String },
}

impl fmt::Display for LandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LandError::TraceStalled(r) => write!(f, "parameter-ray trace stalled: {r:?}"),
            LandError::Extrapolation(e) => write!(f, "{e}"),
            LandError::Solve(e) => write!(f, "{e}"),
            LandError::NoAcceptableRoot { attempts, last } => {
                write!(f, "no acceptable root after {attempts} seeds (last: {last})")
            }
        }
    }
}

impl std::error::Error for LandError {}

/// Full transcript of a landing run.
#[derive(Clone, Debug)]
pub struct LandingTranscript<T: Real> {
    pub trace: RayTrace<T>,
    pub extrapolated: Complex<T>,
    pub uncertainty: T,
    pub dynamic_seed: Option<RayTrace<T>>,
    pub result: LandingResult<T>,
    pub verify: VerifyReport,
}

/// Deterministic seed-perturbation ring used on solver rejection.
fn seed_ring<T: Real>() -> Vec<Complex<T>> {
    let mut ring = vec![Complex::new(T::zero(), T::zero())];
    for &eps in &[1e-3, 3e-3, 1e-2, 3e-2] {
        for &(re, im) in &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)] {
            ring.push(Complex::new(lit(eps * re), lit(eps * im)));
        }
    }
    ring
}

/// Closest-recurrence point of the asymptotic orbit: the iterate `f^k(a)`
/// minimizing `|f^{k+q}(a) - f^k(a)|` outside the trap disk. Near a
/// parabolic boundary parameter the orbit funnels through the forming
/// cycle, so this sits close to a cycle point.
fn recurrence_seed<T: Real>(a: Parameter<T>, q: u32, k_max: u32) -> Option<Complex<T>> {
    let mut orbit = vec![a.value()];
    let mut w = a.value();
    for _ in 0..(k_max + q) {
        w = family::eval(a, w);
        if w.norm() > lit(1e6) {
            break;
        }
        orbit.push(w);
    }
    let ignore_below = crate::planes::trap_radius(a) * lit(2.0);
    let mut best: Option<(T, Complex<T>)> = None;
    for k in 0..orbit.len().saturating_sub(q as usize) {
        let cand = orbit[k];
        if cand.norm() < ignore_below {
            continue;
        }
        let gap = (orbit[k + q as usize] - cand).norm();
        if best.map_or(true, |(g, _)| gap < g) {
            best = Some((gap, cand));
        }
    }
    best.map(|(_, c)| c)
}

/// Trace the parameter ray of `θ`, extrapolate its landing point, dispatch
/// the case solver seeded from the continuation, and verify agreement.
pub fn land_angle<T: Real>(
    theta: RationalAngle,
    cfg: &LandConfig<T>,
) -> Result<LandingTranscript<T>, LandError> {
    let trace = rays::trace_parameter_ray(theta, cfg.r_start, cfg.r_end, cfg.trace_steps, &cfg.trace);
    if let TraceStatus::Stalled(r) = trace.status {
        return Err(LandError::TraceStalled(r));
    }
    let (a0, uncertainty) = rays::estimate_landing(&trace).map_err(LandError::Extrapolation)?;
    let selector = classify_angle(theta);

    // parabolic solving also needs a point near the forming cycle; the
    // endpoint of the dynamic ray the asymptotic value sits on is the
    // primary candidate, the orbit's closest-recurrence point the backup
    let mut dynamic_seed = None;
    let seed_zs: Vec<Complex<T>> = match selector {
        CaseSelector::Parabolic { q } => {
            let a_in = Parameter::new(trace.points.last().expect("complete trace").point)
                .expect("traced parameters are nonzero");
            let dyn_trace = rays::trace_dynamic_ray(
                a_in,
                theta.double(),
                lit(-6.0),
                cfg.dyn_t_end,
                cfg.dyn_steps,
                &cfg.trace,
            );
            let mut zs: Vec<Complex<T>> = dyn_trace.points.last().map(|p| p.point).into_iter().collect();
            dynamic_seed = Some(dyn_trace);
            if let Some(z) = recurrence_seed(a_in, q, 400) {
                zs.push(z);
            }
            zs
        }
        _ => vec![Complex::new(T::zero(), T::zero())],
    };
    if seed_zs.is_empty() {
        return Err(LandError::NoAcceptableRoot {
            attempts: 0,
            last: "no cycle-point seed candidates for the parabolic case".into(),
        });
    }

    let accept_radius = lit::<T>(0.05).max(uncertainty * lit(100.0));
    let mut attempts = 0u32;
    let mut last_err = String::from("no attempt");
    for da in seed_ring::<T>() {
        let seed_a = a0 + da * (T::one() + a0.norm());
        for &seed_z in &seed_zs {
            attempts += 1;
            let solved = match selector {
                CaseSelector::Parabolic { .. } => solve_parabolic(theta, seed_a, seed_z, &cfg.solve),
                CaseSelector::Repelling { .. } => solve_repelling(theta, seed_a, &cfg.solve),
                CaseSelector::Misiurewicz { .. } => solve_misiurewicz(theta, seed_a, &cfg.solve),
            };
            match solved {
                Ok(result) => {
                    // continuation selects the landed root: reject distant ones
                    if (result.parameter - a0).norm() > accept_radius {
                        last_err = format!(
                            "root at distance {} from the ray extrapolation",
                            to_f64((result.parameter - a0).norm())
                        );
                        continue;
                    }
                    let verify = verify_landing(theta, &result, &trace, cfg.agreement_tol);
                    return Ok(LandingTranscript {
                        trace,
                        extrapolated: a0,
                        uncertainty,
                        dynamic_seed,
                        result,
                        verify,
                    });
                }
                Err(e) => {
                    last_err = e.to_string();
                }
            }
        }
    }
    Err(LandError::NoAcceptableRoot {
        attempts,
        last: last_err,
    })
}

// --- serialization -------------------------------------------------------

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum CaseJson {
    Parabolic { q: u32, cycle_point: [f64; 2] },
    RepellingCycle { q: u32 },
    Misiurewicz { l: u32, q: u32, landing_orbit_point: [f64; 2] },
}

#[derive(Serialize)]
struct LandingResultJson<'a> {
    angle: String,
    case: CaseJson,
    parameter: [f64; 2],
    residual: f64,
    multiplier: [f64; 2],
    transcript: &'a [String],
    consistent: bool,
}

impl<T: Real> LandingResult<T> {
    pub fn to_json_string(&self) -> String {
        let case = match &self.case {
            LandingCase::Parabolic { q, cycle_point } => CaseJson::Parabolic {
                q: *q,
                cycle_point: [to_f64(cycle_point.re), to_f64(cycle_point.im)],
            },
            LandingCase::RepellingCycle { q } => CaseJson::RepellingCycle { q: *q },
            LandingCase::Misiurewicz {
                l,
                q,
                landing_orbit_point,
            } => CaseJson::Misiurewicz {
                l: *l,
                q: *q,
                landing_orbit_point: [
                    to_f64(landing_orbit_point.re),
                    to_f64(landing_orbit_point.im),
                ],
            },
        };
        serde_json::to_string_pretty(&LandingResultJson {
            angle: self.angle.to_string(),
            case,
            parameter: [to_f64(self.parameter.re), to_f64(self.parameter.im)],
            residual: to_f64(self.residual),
            multiplier: [to_f64(self.multiplier.re), to_f64(self.multiplier.im)],
            transcript: &self.transcript,
            consistent: self.consistent,
        })
        .expect("landing serialization")
    }
}

trait IsFiniteC {
    fn is_finite(&self) -> bool;
}

impl<T: Real> IsFiniteC for Complex<T> {
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Cplx;

    fn ang(n: u64, d: u64) -> RationalAngle {
        RationalAngle::new(n, d).unwrap()
    }

    #[test]
    fn classification() {
        assert_eq!(classify_angle(ang(1, 3)), CaseSelector::Parabolic { q: 2 });
        assert_eq!(classify_angle(ang(1, 2)), CaseSelector::Repelling { q: 1 });
        assert_eq!(
            classify_angle(ang(1, 4)),
            CaseSelector::Misiurewicz { l: 2, q: 1 }
        );
        assert_eq!(classify_angle(ang(0, 1)), CaseSelector::Parabolic { q: 1 });
        assert_eq!(classify_angle(ang(1, 6)), CaseSelector::Repelling { q: 2 });
    }

    #[test]
    fn repelling_q1_is_exact() {
        let cfg = SolveConfig::default();
        let r = solve_repelling(ang(1, 2), Cplx::new(0.9, 0.1), &cfg).unwrap();
        assert_eq!(r.parameter, Cplx::new(1.0, 0.0));
        let e = std::f64::consts::E;
        assert!((r.multiplier - Cplx::new(e, 0.0)).norm() < 1e-12);
        assert!(r.residual < 1e-14);
        match r.case {
            LandingCase::RepellingCycle { q } => assert_eq!(q, 1),
            ref c => panic!("wrong case {c:?}"),
        }
    }

    #[test]
    fn wrong_case_rejected() {
        let cfg = SolveConfig::default();
        assert!(matches!(
            solve_parabolic(ang(1, 2), Cplx::new(1.0, 0.0), Cplx::new(1.0, 0.0), &cfg),
            Err(SolveError::WrongCase { .. })
        ));
        assert!(matches!(
            solve_repelling(ang(1, 3), Cplx::new(1.0, 0.0), &cfg),
            Err(SolveError::WrongCase { .. })
        ));
        assert!(matches!(
            solve_misiurewicz(ang(1, 2), Cplx::new(1.0, 0.0), &cfg),
            Err(SolveError::WrongCase { .. })
        ));
    }

    #[test]
    fn parabolic_q1_matches_scalar_oracle() {
        // eliminating a from {a z e^z = 1, f_a(z) = z} leaves
        // e^{-z} = z² - z + 1 with a = e^{-z}/z; bisect the real root
        let h = |z: f64| (-z).exp() - z * z + z - 1.0;
        let (mut lo, mut hi) = (-3.0f64, -1.0f64);
        assert!(h(lo) > 0.0 && h(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z_star = 0.5 * (lo + hi);
        let a_star = (-z_star).exp() / z_star;
        assert!((z_star + 1.80).abs() < 0.02, "oracle root near -1.80");

        let cfg = SolveConfig::default();
        let r = solve_parabolic(
            ang(0, 1),
            Cplx::new(a_star + 3e-3, 2e-3),
            Cplx::new(z_star - 2e-3, 1e-3),
            &cfg,
        )
        .unwrap();
        assert!((r.parameter - Cplx::new(a_star, 0.0)).norm() < 1e-10);
        match r.case {
            LandingCase::Parabolic { q, cycle_point } => {
                assert_eq!(q, 1);
                assert!((cycle_point - Cplx::new(z_star, 0.0)).norm() < 1e-10);
            }
            ref c => panic!("wrong case {c:?}"),
        }
        assert!((r.multiplier - Cplx::new(1.0, 0.0)).norm() < 1e-8);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn misiurewicz_checks_strictness() {
        // at the solved root of f²(a) = f(a), a itself must not be fixed
        let cfg = SolveConfig::default();
        // seed loosely; the solver should still find a root of the equation
        // and the acceptance of the root happens in the pipeline
        let sols: Vec<_> = [
            Cplx::new(-1.0, 1.0),
            Cplx::new(-0.5, 1.5),
            Cplx::new(-1.5, 0.5),
        ]
        .iter()
        .filter_map(|&s| solve_misiurewicz(ang(1, 4), s, &cfg).ok())
        .collect();
        for r in sols {
            let a = Parameter::new(r.parameter).unwrap();
            let fa = family::eval(a, r.parameter);
            let ffa = family::eval(a, fa);
            assert!((ffa - fa).norm() < 1e-9, "f(a) must be fixed");
            assert!((fa - r.parameter).norm() > 1e-6, "a itself must not be fixed");
        }
    }
}
