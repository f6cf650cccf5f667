//! Escape/attraction-time renderers for the dynamical and parameter plane,
//! plus pixel-grid machinery shared with the convergence laboratory.
//!
//! Classification is certified on the attracting side: a pixel is labeled
//! `Basin0` only once its orbit enters a disk that provably maps into half
//! of itself. Escape past the transcendental direction has no Green's
//! function, so the escape label is the documented heuristic
//! (`|z| > escape bound` or overflow of `e^z`) and `Unresolved` is a
//! first-class outcome, never an error.
//!
//! Renders are pure functions of their inputs; pixel rows are classified in
//! parallel and merged in index order, so outputs are byte-identical across
//! runs and thread counts.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::convlab::CompactGridSet;
use crate::family::{self, Parameter, Verdict};
use crate::{lit, to_f64, Complex, Real};

/// Default modulus beyond which an orbit counts as escaped.
pub const DEFAULT_ESCAPE_BOUND: f64 = 1e10;

/// Rectangular pixel viewport with an affine, exactly invertible
/// pixel-center mapping. Row 0 is the top of the viewport.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec<T: Real> {
    pub center_re: T,
    pub center_im: T,
    pub half_width: T,
    pub half_height: T,
    pub nx: u32,
    pub ny: u32,
}

/// Errors from grid construction, component extraction and image output.
#[derive(Debug)]
pub enum PlanesError {
    BadGrid(String),
    /// The marked point's pixel does not carry the requested label.
    LabelMismatch {
        expected: LabelKind,
        found: Option<LabelKind>,
    },
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl fmt::Display for PlanesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanesError::BadGrid(s) => write!(f, "invalid grid: {s}"),
            PlanesError::LabelMismatch { expected, found } => {
                write!(f, "marked pixel label {found:?} does not match {expected:?}")
            }
            PlanesError::Io { path, source } => {
                write!(f, "i/o failure on {}: {source}", path.display())
            }
        }
    }
}

impl std::error::Error for PlanesError {}

impl<T: Real> GridSpec<T> {
    pub fn new(
        center: Complex<T>,
        half_width: T,
        half_height: T,
        nx: u32,
        ny: u32,
    ) -> Result<Self, PlanesError> {
        if !(half_width > T::zero()) || !(half_height > T::zero()) {
            return Err(PlanesError::BadGrid("half extents must be positive".into()));
        }
        if nx == 0 || ny == 0 {
            return Err(PlanesError::BadGrid("resolution must be positive".into()));
        }
        Ok(Self {
            center_re: center.re,
            center_im: center.im,
            half_width,
            half_height,
            nx,
            ny,
        })
    }

    /// Viewport `[x0, x1] × [y0, y1]` at resolution `nx × ny`.
    pub fn from_viewport(x0: T, x1: T, y0: T, y1: T, nx: u32, ny: u32) -> Result<Self, PlanesError> {
        if !(x1 > x0) || !(y1 > y0) {
            return Err(PlanesError::BadGrid("viewport must have positive extent".into()));
        }
        let half = lit::<T>(0.5);
        Self::new(
            Complex::new((x0 + x1) * half, (y0 + y1) * half),
            (x1 - x0) * half,
            (y1 - y0) * half,
            nx,
            ny,
        )
    }

    pub fn pixel_count(&self) -> usize {
        self.nx as usize * self.ny as usize
    }

    /// Pixel width and height in plane units.
    pub fn steps(&self) -> (T, T) {
        let two = lit::<T>(2.0);
        (
            two * self.half_width / lit::<T>(self.nx as f64),
            two * self.half_height / lit::<T>(self.ny as f64),
        )
    }

    /// Diagonal of one pixel.
    pub fn pixel_diag(&self) -> T {
        let (sx, sy) = self.steps();
        sx.hypot(sy)
    }

    /// Center of pixel `(ix, iy)`; row 0 is the top row.
    pub fn point_at(&self, ix: u32, iy: u32) -> Complex<T> {
        let (sx, sy) = self.steps();
        let half = lit::<T>(0.5);
        Complex::new(
            self.center_re - self.half_width + (lit::<T>(ix as f64) + half) * sx,
            self.center_im + self.half_height - (lit::<T>(iy as f64) + half) * sy,
        )
    }

    /// Pixel containing `p`, if inside the viewport; exact at pixel centers.
    pub fn pixel_of(&self, p: Complex<T>) -> Option<(u32, u32)> {
        let (sx, sy) = self.steps();
        let fx = (p.re - (self.center_re - self.half_width)) / sx;
        let fy = ((self.center_im + self.half_height) - p.im) / sy;
        if fx < T::zero() || fy < T::zero() {
            return None;
        }
        let ix = fx.floor().to_u64()? as u32;
        let iy = fy.floor().to_u64()? as u32;
        if ix < self.nx && iy < self.ny {
            Some((ix, iy))
        } else {
            None
        }
    }

    pub fn index_of(&self, ix: u32, iy: u32) -> usize {
        iy as usize * self.nx as usize + ix as usize
    }

    pub fn point_of_index(&self, idx: usize) -> Complex<T> {
        let ix = (idx % self.nx as usize) as u32;
        let iy = (idx / self.nx as usize) as u32;
        self.point_at(ix, iy)
    }

    /// Largest pixel-center modulus, a bound used by the chordal metric.
    pub fn max_center_modulus(&self) -> T {
        let mut m = T::zero();
        for &ix in &[0, self.nx - 1] {
            for &iy in &[0, self.ny - 1] {
                m = m.max(self.point_at(ix, iy).norm());
            }
        }
        m
    }

    /// Lossy double-precision copy for reports.
    pub fn to_f64_spec(&self) -> GridSpec<f64> {
        GridSpec {
            center_re: to_f64(self.center_re),
            center_im: to_f64(self.center_im),
            half_width: to_f64(self.half_width),
            half_height: to_f64(self.half_height),
            nx: self.nx,
            ny: self.ny,
        }
    }
}

/// Per-pixel orbit classification, with the deciding iteration count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Basin0(u32),
    Escaping(u32),
    Unresolved,
}

/// Label with iteration counts stripped, for component extraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    Basin0,
    Escaping,
    Unresolved,
}

impl Label {
    pub fn kind(self) -> LabelKind {
        match self {
            Label::Basin0(_) => LabelKind::Basin0,
            Label::Escaping(_) => LabelKind::Escaping,
            Label::Unresolved => LabelKind::Unresolved,
        }
    }
}

impl From<Verdict> for Label {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::ConvergesToZero(k) => Label::Basin0(k),
            Verdict::Escaping(k) => Label::Escaping(k),
            Verdict::Unresolved => Label::Unresolved,
        }
    }
}

/// Which plane a grid classifies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneKind {
    /// Dynamical plane of a fixed parameter.
    Dynamical { a_re: f64, a_im: f64 },
    /// Parameter plane; each pixel classifies the orbit of its own
    /// asymptotic value.
    Parameter,
}

/// Rectangular grid of orbit classifications.
#[derive(Clone, Debug)]
pub struct ClassifiedGrid<T: Real> {
    pub spec: GridSpec<T>,
    pub labels: Vec<Label>,
    pub plane: PlaneKind,
}

/// Label counts for sidecars and quick sanity checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub basin0: u64,
    pub escaping: u64,
    pub unresolved: u64,
}

impl<T: Real> ClassifiedGrid<T> {
    pub fn label_at(&self, ix: u32, iy: u32) -> Label {
        self.labels[self.spec.index_of(ix, iy)]
    }

    pub fn histogram(&self) -> Histogram {
        let mut h = Histogram::default();
        for l in &self.labels {
            match l {
                Label::Basin0(_) => h.basin0 += 1,
                Label::Escaping(_) => h.escaping += 1,
                Label::Unresolved => h.unresolved += 1,
            }
        }
        h
    }
}

/// Certified trap radius: the largest `ρ ≤ 0.5` with
/// `|a| (e^ρ - 1 - ρ/2) ≤ 1/2`, found by bisection.
///
/// The series split `|f_a(z)| ≤ |a| ρ²/2 + |a| ρ (e^ρ - 1 - ρ)` for
/// `|z| ≤ ρ` turns that inequality into `|f_a(z)| ≤ ρ/2`, so `f_a` maps the
/// trap disk into its concentric half and every orbit entering it converges
/// to the superattracting fixed point. Nonincreasing in `|a|`, positive for
/// every `a ≠ 0`.
pub fn trap_radius<T: Real>(a: Parameter<T>) -> T {
    let half = lit::<T>(0.5);
    let m = a.modulus();
    let margin = |rho: T| m * (rho.exp() - T::one() - rho * half) - half;
    if margin(half) <= T::zero() {
        return half;
    }
    let mut lo = T::zero();
    let mut hi = half;
    for _ in 0..80 {
        let mid = (lo + hi) * half;
        if margin(mid) <= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Classify the dynamical plane of `a`: per-pixel orbit of the pixel center.
pub fn render_dynamical<T: Real>(
    a: Parameter<T>,
    spec: &GridSpec<T>,
    budget: u32,
) -> ClassifiedGrid<T> {
    let trap = trap_radius(a);
    let escape = lit::<T>(DEFAULT_ESCAPE_BOUND);
    let nx = spec.nx;
    let labels: Vec<Label> = (0..spec.ny)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let spec = *spec;
            (0..nx).map(move |ix| {
                let z0 = spec.point_at(ix, iy);
                Label::from(family::classify_orbit(a, z0, budget, trap, escape).0)
            })
        })
        .collect();
    ClassifiedGrid {
        spec: *spec,
        labels,
        plane: PlaneKind::Dynamical {
            a_re: to_f64(a.value().re),
            a_im: to_f64(a.value().im),
        },
    }
}

/// Classify the parameter plane: per-pixel orbit of the asymptotic value
/// `a` (the unique free singular value) under its own map.
///
/// The `Basin0` label marks the main component together with capture
/// components; eventual conversion to the origin is the shared criterion.
pub fn render_parameter<T: Real>(spec: &GridSpec<T>, budget: u32) -> ClassifiedGrid<T> {
    let escape = lit::<T>(DEFAULT_ESCAPE_BOUND);
    let nx = spec.nx;
    let labels: Vec<Label> = (0..spec.ny)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let spec = *spec;
            (0..nx).map(move |ix| {
                let c = spec.point_at(ix, iy);
                match Parameter::new(c) {
                    // the puncture a = 0 is the adjoined component center
                    Err(_) => Label::Basin0(0),
                    Ok(a) => {
                        let trap = trap_radius(a);
                        Label::from(family::classify_orbit(a, c, budget, trap, escape).0)
                    }
                }
            })
        })
        .collect();
    ClassifiedGrid {
        spec: *spec,
        labels,
        plane: PlaneKind::Parameter,
    }
}

/// 4-connected component of pixels sharing the marked pixel's label kind.
pub fn extract_component<T: Real>(
    grid: &ClassifiedGrid<T>,
    marked: Complex<T>,
    want: LabelKind,
) -> Result<CompactGridSet<T>, PlanesError> {
    let (ix, iy) = grid.spec.pixel_of(marked).ok_or_else(|| PlanesError::LabelMismatch {
        expected: want,
        found: None,
    })?;
    let start = grid.spec.index_of(ix, iy);
    if grid.labels[start].kind() != want {
        return Err(PlanesError::LabelMismatch {
            expected: want,
            found: Some(grid.labels[start].kind()),
        });
    }
    let nx = grid.spec.nx as usize;
    let n = grid.labels.len();
    let mut member = vec![false; n];
    let mut stack = vec![start];
    member[start] = true;
    while let Some(idx) = stack.pop() {
        let x = idx % nx;
        let mut push = |j: usize| {
            if !member[j] && grid.labels[j].kind() == want {
                member[j] = true;
                stack.push(j);
            }
        };
        if x > 0 {
            push(idx - 1);
        }
        if x + 1 < nx {
            push(idx + 1);
        }
        if idx >= nx {
            push(idx - nx);
        }
        if idx + nx < n {
            push(idx + nx);
        }
    }
    let pixels = (0..n).filter(|&j| member[j]).map(|j| j as u32);
    CompactGridSet::from_indices(grid.spec, pixels, Some(marked))
        .map_err(|e| PlanesError::BadGrid(e.to_string()))
}

/// Color maps; all are pure per-label functions so rendering stays
/// deterministic and budget-monotone in the unresolved pixels only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Palette {
    /// Basin black, escaping white, unresolved gray.
    Mono,
    /// Blue basin ramp, warm escape ramp, black unresolved.
    Classic,
}

impl FromStr for Palette {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mono" => Ok(Palette::Mono),
            "classic" => Ok(Palette::Classic),
            other => Err(format!("unknown palette {other:?} (expected mono|classic)")),
        }
    }
}

impl Palette {
    pub fn color(self, label: Label) -> [u8; 3] {
        match self {
            Palette::Mono => match label {
                Label::Basin0(_) => [0, 0, 0],
                Label::Escaping(_) => [255, 255, 255],
                Label::Unresolved => [128, 128, 128],
            },
            Palette::Classic => match label {
                Label::Basin0(k) => {
                    let t = ((k as u32 * 7) % 156) as u8;
                    [24, 64 + t / 2, 255 - t]
                }
                Label::Escaping(k) => {
                    let t = ((k as u32 * 23) % 180) as u8;
                    [250 - t / 2, 240 - t, 210 - t]
                }
                Label::Unresolved => [0, 0, 0],
            },
        }
    }
}

/// Binary PPM (P6, maxval 255), row-major from the top-left pixel.
pub fn encode_ppm<T: Real>(grid: &ClassifiedGrid<T>, palette: Palette) -> Vec<u8> {
    let mut out = Vec::with_capacity(grid.labels.len() * 3 + 32);
    // header is ASCII by the format; write! to a Vec cannot fail
    write!(out, "P6\n{} {}\n255\n", grid.spec.nx, grid.spec.ny).expect("vec write");
    for &label in &grid.labels {
        out.extend_from_slice(&palette.color(label));
    }
    out
}

/// Write the grid as a P6 PPM; byte-identical across runs and thread counts.
pub fn write_image<T: Real>(
    grid: &ClassifiedGrid<T>,
    palette: Palette,
    path: &Path,
) -> Result<(), PlanesError> {
    std::fs::write(path, encode_ppm(grid, palette)).map_err(|source| PlanesError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Machine-readable sidecar describing a render.
#[derive(Clone, Debug, Serialize)]
pub struct RenderSidecar {
    pub plane: PlaneKind,
    pub spec: GridSpec<f64>,
    pub budget: u32,
    pub palette: Palette,
    pub histogram: Histogram,
}

impl RenderSidecar {
    pub fn new<T: Real>(grid: &ClassifiedGrid<T>, budget: u32, palette: Palette) -> Self {
        Self {
            plane: grid.plane,
            spec: grid.spec.to_f64_spec(),
            budget,
            palette,
            histogram: grid.histogram(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Cplx;

    fn p(re: f64, im: f64) -> Parameter<f64> {
        Parameter::new(Cplx::new(re, im)).unwrap()
    }

    fn spec(nx: u32, ny: u32) -> GridSpec<f64> {
        GridSpec::from_viewport(-2.0, 2.0, -1.5, 1.5, nx, ny).unwrap()
    }

    #[test]
    fn pixel_mapping_round_trips() {
        let s = spec(37, 23);
        for iy in 0..s.ny {
            for ix in 0..s.nx {
                let z = s.point_at(ix, iy);
                assert_eq!(s.pixel_of(z), Some((ix, iy)), "pixel ({ix},{iy})");
            }
        }
        assert_eq!(s.pixel_of(Cplx::new(9.0, 0.0)), None);
        assert_eq!(s.pixel_of(Cplx::new(0.0, -9.0)), None);
    }

    #[test]
    fn trap_radius_caps_and_decreases() {
        let r1 = trap_radius(p(1.0, 0.0));
        assert_eq!(r1, 0.5, "|a| = 1 still caps at 0.5");
        let mut prev = r1;
        for m in [2.0, 3.0, 5.0, 9.2324, 20.0, 100.0] {
            let r = trap_radius(p(m, 0.0));
            assert!(r > 0.0 && r <= prev + 1e-15, "nonincreasing at |a| = {m}");
            prev = r;
        }
        // consistent with the certified bounding disk at the critical scale
        assert!(trap_radius(p(9.2324, 0.0)) < 0.4054);
    }

    #[test]
    fn trap_radius_matches_bisection_oracle() {
        // independent oracle: solve |a|(e^r - 1 - r/2) = 1/2 on (0, 1)
        for m in [1.3, 2.0, 4.7, 11.0] {
            let f = |r: f64| m * (r.exp() - 1.0 - r / 2.0) - 0.5;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let expected = lo.min(0.5);
            let got = trap_radius(p(m, 0.0));
            assert!((got - expected).abs() < 1e-12, "|a|={m}: {got} vs {expected}");
        }
    }

    #[test]
    fn trap_is_sound_on_the_boundary_circle() {
        for m in [0.5, 1.0, 3.0, 9.0] {
            let a = p(m, 0.0);
            let rho = trap_radius(a);
            for k in 0..64 {
                let t = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
                let z = Cplx::new(rho * t.cos(), rho * t.sin());
                let fz = family::eval(a, z);
                assert!(
                    fz.norm() <= rho / 2.0 + 1e-12,
                    "|a|={m}, |f(z)| = {} > ρ/2 = {}",
                    fz.norm(),
                    rho / 2.0
                );
            }
        }
    }

    #[test]
    fn dynamical_render_anchors() {
        let a = p(0.4, 0.6);
        let s = GridSpec::from_viewport(-10.0, 10.0, -10.0, 10.0, 64, 64).unwrap();
        let g = render_dynamical(a, &s, 2000);
        // pixel at the origin converges immediately-ish
        let (ix, iy) = s.pixel_of(Cplx::new(0.0, 0.0)).unwrap();
        assert_eq!(g.label_at(ix, iy).kind(), LabelKind::Basin0);
        // the asymptotic value's pixel lies in the basin for this parameter
        let (ix, iy) = s.pixel_of(a.value()).unwrap();
        assert_eq!(g.label_at(ix, iy).kind(), LabelKind::Basin0);
    }

    #[test]
    fn preimage_and_value_verdicts_agree() {
        let a = p(0.4, 0.6);
        let trap = trap_radius(a);
        let (v1, _) = family::classify_orbit(a, Cplx::new(1.0, 0.0), 2000, trap, 1e10);
        let (va, _) = family::classify_orbit(a, a.value(), 2000, trap, 1e10);
        match (v1, va) {
            (Verdict::ConvergesToZero(k1), Verdict::ConvergesToZero(ka)) => assert_eq!(k1, ka + 1),
            other => panic!("expected matching basin verdicts, got {other:?}"),
        }
    }

    #[test]
    fn parameter_render_anchor_and_bound() {
        let s = GridSpec::from_viewport(-10.0, 10.0, -10.0, 10.0, 48, 48).unwrap();
        let g = render_parameter(&s, 3000);
        let (ix, iy) = s.pixel_of(Cplx::new(0.4, 0.6)).unwrap();
        assert_eq!(g.label_at(ix, iy).kind(), LabelKind::Basin0);
        let (ix, iy) = s.pixel_of(Cplx::new(9.9, 9.9)).unwrap();
        assert_ne!(g.label_at(ix, iy).kind(), LabelKind::Basin0);
    }

    #[test]
    fn budget_only_resolves_unresolved() {
        let a = p(0.4, 0.6);
        let s = spec(48, 32);
        let lo = render_dynamical(a, &s, 60);
        let hi = render_dynamical(a, &s, 600);
        for (l, h) in lo.labels.iter().zip(hi.labels.iter()) {
            match (l, h) {
                (Label::Unresolved, _) => {}
                (a, b) => assert_eq!(a, b, "budget flip on a resolved pixel"),
            }
        }
    }

    #[test]
    fn component_extraction_blobs() {
        let s = spec(8, 1);
        // two escape blobs separated by a basin pixel
        let labels = vec![
            Label::Escaping(1),
            Label::Escaping(2),
            Label::Basin0(0),
            Label::Escaping(3),
            Label::Escaping(4),
            Label::Escaping(5),
            Label::Basin0(1),
            Label::Escaping(6),
        ];
        let g = ClassifiedGrid {
            spec: s,
            labels,
            plane: PlaneKind::Parameter,
        };
        let set = extract_component(&g, s.point_at(4, 0), LabelKind::Escaping).unwrap();
        let pixels: Vec<u32> = set.indices().to_vec();
        assert_eq!(pixels, vec![3, 4, 5]);
        // full-grid single label
        let g2 = ClassifiedGrid {
            spec: s,
            labels: vec![Label::Basin0(0); 8],
            plane: PlaneKind::Parameter,
        };
        let set = extract_component(&g2, s.point_at(2, 0), LabelKind::Basin0).unwrap();
        assert_eq!(set.indices().len(), 8);
        // mismatch
        assert!(extract_component(&g2, s.point_at(2, 0), LabelKind::Escaping).is_err());
    }

    #[test]
    fn ppm_encoding_shape() {
        let s = GridSpec::from_viewport(-1.0, 1.0, -1.0, 1.0, 1, 1).unwrap();
        let g = ClassifiedGrid {
            spec: s,
            labels: vec![Label::Basin0(0)],
            plane: PlaneKind::Parameter,
        };
        let bytes = encode_ppm(&g, Palette::Mono);
        assert_eq!(bytes, b"P6\n1 1\n255\n\x00\x00\x00");
    }

    #[test]
    fn render_determinism_across_pools() {
        let a = p(0.4, 0.6);
        let s = spec(40, 30);
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let g1 = pool1.install(|| render_dynamical(a, &s, 400));
        let g8 = pool8.install(|| render_dynamical(a, &s, 400));
        assert_eq!(g1.labels, g8.labels);
        assert_eq!(
            encode_ppm(&g1, Palette::Classic),
            encode_ppm(&g8, Palette::Classic)
        );
    }
}
